//! Command-line front end.
//!
//! Exit codes: 0 success, 2 input or configuration error, 3 backend or
//! computation failure.

mod commands;
pub mod config;
pub mod manifest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::quantify::{Axis, Side};

pub use config::{BackendConfig, Laterality, RunConfig, Stage};
pub use manifest::{read_manifest, InputKind, ManifestEntry};

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "MRDENSITY_THREADS";

#[derive(Debug, Parser)]
#[command(name = "mrdensity", version, about = "Breast MRI density quantification")]
pub struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a DICOM series or portable volume to a portable volume.
    Ingest(IngestArgs),
    /// Segment breast and dense tissue.
    Segment(SegmentArgs),
    /// Compute the density ratio from a breast / dense mask pair.
    Quantify(QuantifyArgs),
    /// Cohort summaries, histogram and age-bin tables.
    Cohort(CohortArgs),
    /// Density vs. mammography category correlation.
    Correlate(CorrelateArgs),
    /// Dice and Hausdorff distance between two masks.
    Evaluate(EvaluateArgs),
    /// Extract density categories from mammography report text.
    ParseReports(ParseReportsArgs),
    /// Generate a synthetic phantom with truth masks.
    Phantom(PhantomArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Auto,
    Dicom,
    Portable,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// DICOM series directory or portable header (.json).
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
    pub format: InputFormat,
    /// Output header path; the payload is written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// Portable volume header or DICOM series directory.
    pub volume: PathBuf,
    #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
    pub format: InputFormat,
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub patch_size: Option<usize>,
    /// Window steps per axis, e.g. `8,8,3`.
    #[arg(long, value_parser = parse_steps)]
    pub steps: Option<[usize; 3]>,
    /// `fcm`, `oracle:<mask.json>` or `import:<probabilities.json>`.
    #[arg(long)]
    pub breast_backend: Option<String>,
    #[arg(long)]
    pub dense_backend: Option<String>,
    /// FCM cluster index (ascending centroid order) taken as dense tissue.
    #[arg(long)]
    pub dense_cluster: Option<usize>,
}

#[derive(Debug, Args)]
pub struct QuantifyArgs {
    #[arg(long)]
    pub breast: PathBuf,
    #[arg(long)]
    pub dense: PathBuf,
    #[arg(long, default_value = "subject")]
    pub subject_id: String,
    /// `whole`, `left`, `right` or `contralateral:<tumor side>`.
    #[arg(long, default_value = "whole")]
    pub laterality: String,
    /// Tumor side; measures the opposite breast.
    #[arg(long, conflicts_with = "laterality")]
    pub tumor_side: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-slice profile CSV.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    #[arg(long, default_value = "z")]
    pub axis: String,
}

#[derive(Debug, Args)]
pub struct CohortArgs {
    /// Cohort CSV (`subject_id,dataset,age,density,mammo_category`).
    #[arg(required_unless_present = "manifest", conflicts_with = "manifest")]
    pub cohort: Option<PathBuf>,
    /// Batch manifest; every subject is segmented and quantified first.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Run configuration for manifest mode.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 0.02)]
    pub bin_width: f64,
    /// Use the n - 1 denominator for standard deviations.
    #[arg(long)]
    pub sample_std: bool,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    pub cohort: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Also fit the threshold classifier on a shuffled train/test split.
    #[arg(long)]
    pub classifier: bool,
    #[arg(long, default_value_t = 0.8)]
    pub split: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub sample_std: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    pub pred: PathBuf,
    pub truth: PathBuf,
    /// Measure Hausdorff distance in mm using the truth header's spacing.
    #[arg(long)]
    pub spacing_weighted: bool,
}

#[derive(Debug, Args)]
pub struct ParseReportsArgs {
    /// Directory of report files or a `subject_id,report_text` CSV.
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Reports without a category keyword; defaults to `exceptions.csv` next to `--out`.
    #[arg(long)]
    pub exceptions: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PhantomArgs {
    /// TOML phantom spec; defaults are used when omitted.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn parse_steps(s: &str) -> Result<[usize; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let err = || format!("expected three comma-separated counts, got {s:?}");
    if parts.len() != 3 {
        return Err(err());
    }
    let mut out = [0; 3];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.parse().map_err(|_| err())?;
    }
    Ok(out)
}

impl QuantifyArgs {
    fn laterality(&self) -> crate::Result<Laterality> {
        match &self.tumor_side {
            Some(side) => match side.parse::<Side>()? {
                Side::Whole => Err(Error::Config("--tumor-side must be left or right".into())),
                s => Ok(Laterality::Contralateral(s)),
            },
            None => self.laterality.parse(),
        }
    }

    fn axis(&self) -> crate::Result<Axis> {
        self.axis.parse()
    }
}

pub fn run(cli: Cli) -> crate::Result<()> {
    match cli.command {
        Command::Ingest(a) => commands::ingest(&a),
        Command::Segment(a) => commands::segment(&a),
        Command::Quantify(a) => commands::quantify(&a),
        Command::Cohort(a) => commands::cohort(&a),
        Command::Correlate(a) => commands::correlate(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::ParseReports(a) => commands::parse_reports(&a),
        Command::Phantom(a) => commands::phantom(&a),
    }
}

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Backend(_) | Error::TooFewDistinct { .. } | Error::ZeroVariance(_) => 3,
        _ => 2,
    }
}

/// Sizes the global thread pool from [`THREADS_ENV`] when set.
pub fn init_thread_pool() -> crate::Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV}={raw:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}
