use std::fs::{self, File};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::config::{BackendConfig, RunConfig, Stage};
use super::manifest::{read_manifest, InputKind, ManifestEntry};
use super::{
    CohortArgs, CorrelateArgs, EvaluateArgs, IngestArgs, InputFormat, ParseReportsArgs, PhantomArgs,
    QuantifyArgs, SegmentArgs,
};
use crate::analytics::{
    age_group_stats, auc_binary, cohort_summary, fit_threshold_classifier, histogram, kendall_tau,
    parse_density_category, read_cohort_csv, read_corpus, spearman, write_cohort_csv, CohortRecord,
    DensityCategory, StdConvention, Summary,
};
use crate::error::{Error, Result};
use crate::io::{
    load_dicom_series, load_mask, load_mask_with_spacing, load_portable_volume, save_mask,
    save_portable_volume,
};
use crate::phantom::{generate_phantom, PhantomSpec};
use crate::quantify::{compute_density, evaluate as seg_metrics, slice_density_profile, DensityRecord, Side, SliceProfile};
use crate::segmentation::backend::ClusterTarget;
use crate::segmentation::pipeline::{segment_subject, split_laterality, SegmentParams, SubjectMasks};
use crate::volume::{BinaryMask3D, Volume3D};

const BREAST_MASK: &str = "breast_mask.json";
const DENSE_MASK: &str = "dense_mask.json";
const RUN_RECORD: &str = "run_record.json";

struct CsvOut {
    path: PathBuf,
    writer: csv::Writer<File>,
}

impl CsvOut {
    fn create(path: &Path) -> Result<Self> {
        ensure_parent(path)?;
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(CsvOut {
            path: path.to_path_buf(),
            writer: csv::Writer::from_writer(file),
        })
    }

    fn row<I, T>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[u8]>,
    {
        self.writer
            .write_record(fields)
            .map_err(|e| Error::io(&self.path, e.into()))
    }

    fn finish(mut self) -> Result<()> {
        self.writer.flush().map_err(|e| Error::io(&self.path, e))
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
        }
        _ => Ok(()),
    }
}

fn f6(v: f64) -> String {
    format!("{v:.6}")
}

fn load_volume(path: &Path, format: InputFormat) -> Result<Volume3D> {
    let meta = fs::metadata(path).map_err(|e| Error::io(path, e))?;
    let dicom = match format {
        InputFormat::Dicom => true,
        InputFormat::Portable => false,
        InputFormat::Auto => meta.is_dir(),
    };
    if dicom {
        let (volume, meta) = load_dicom_series(path)?;
        log::info!(
            "{}: {} slices, z {:.3}..{:.3} mm",
            path.display(),
            meta.slice_positions.len(),
            meta.slice_positions.first().copied().unwrap_or(0.0),
            meta.slice_positions.last().copied().unwrap_or(0.0)
        );
        Ok(volume)
    } else {
        load_portable_volume(path)
    }
}

fn describe(volume: &Volume3D) -> String {
    let [nx, ny, nz] = volume.dims();
    let [sx, sy, sz] = volume.spacing();
    format!(
        "dims {nx}x{ny}x{nz}  spacing {sx:.3}x{sy:.3}x{sz:.3} mm  orientation {}",
        volume.orientation()
    )
}

pub(super) fn ingest(a: &IngestArgs) -> Result<()> {
    let volume = load_volume(&a.input, a.format)?;
    save_portable_volume(&volume, &a.out)?;
    println!("{}", describe(&volume));
    Ok(())
}

#[derive(Debug, Serialize)]
struct RunRecord<'a> {
    input: String,
    dims: [usize; 3],
    spacing_mm: [f64; 3],
    params: SegmentParams,
    breast_backend: &'a BackendConfig,
    dense_backend: &'a BackendConfig,
    patch_count: usize,
    breast_voxels: usize,
    dense_voxels: usize,
}

fn segment_with(volume: &Volume3D, cfg: &RunConfig, params: &SegmentParams) -> Result<SubjectMasks> {
    let breast = cfg.breast_backend.resolve(Stage::Breast)?;
    let dense = cfg.dense_backend.resolve(Stage::Dense)?;
    segment_subject(volume, &breast, &dense, params)
}

fn write_masks(dir: &Path, masks: &SubjectMasks, spacing: [f64; 3]) -> Result<()> {
    save_mask(&masks.breast, spacing, &dir.join(BREAST_MASK))?;
    save_mask(&masks.dense, spacing, &dir.join(DENSE_MASK))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    ensure_parent(path)?;
    let mut text = serde_json::to_string_pretty(value).expect("record serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    path.map(RunConfig::load).transpose().map(Option::unwrap_or_default)
}

pub(super) fn segment(a: &SegmentArgs) -> Result<()> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(t) = a.threshold {
        cfg.threshold = t;
    }
    if let Some(p) = a.patch_size {
        cfg.patch_size = p;
    }
    if let Some(s) = a.steps {
        cfg.steps = s;
    }
    if let Some(b) = &a.breast_backend {
        cfg.breast_backend = b.parse()?;
    }
    if let Some(b) = &a.dense_backend {
        cfg.dense_backend = b.parse()?;
    }
    if let Some(k) = a.dense_cluster {
        match &mut cfg.dense_backend {
            BackendConfig::Fcm { target, .. } => *target = Some(ClusterTarget::Cluster(k)),
            other => {
                return Err(Error::Config(format!(
                    "--dense-cluster needs the fcm dense backend, not {}",
                    other.kind()
                )))
            }
        }
    }
    let out_dir = a
        .out_dir
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .ok_or_else(|| Error::Config("an output directory is required (--out-dir)".into()))?;
    let params = cfg.segment_params()?;

    let volume = load_volume(&a.volume, a.format)?;
    let masks = segment_with(&volume, &cfg, &params)?;
    write_masks(&out_dir, &masks, volume.spacing())?;
    let record = RunRecord {
        input: a.volume.display().to_string(),
        dims: volume.dims(),
        spacing_mm: volume.spacing(),
        params,
        breast_backend: &cfg.breast_backend,
        dense_backend: &cfg.dense_backend,
        patch_count: masks.patch_count,
        breast_voxels: masks.breast.count(),
        dense_voxels: masks.dense.count(),
    };
    write_json(&out_dir.join(RUN_RECORD), &record)?;
    println!(
        "{} patches  breast {} voxels  dense {} voxels",
        masks.patch_count,
        masks.breast.count(),
        masks.dense.count()
    );
    Ok(())
}

/// Restricts a mask to one side of the midsagittal plane.
fn side_mask(mask: &BinaryMask3D, side: Side) -> BinaryMask3D {
    match side {
        Side::Whole => mask.clone(),
        Side::Left => split_laterality(mask).0,
        Side::Right => split_laterality(mask).1,
    }
}

fn measure(breast: &BinaryMask3D, dense: &BinaryMask3D, side: Side) -> Result<(BinaryMask3D, BinaryMask3D)> {
    breast.check_dims(dense)?;
    Ok((side_mask(breast, side), side_mask(dense, side)))
}

pub const DENSITY_HEADER: [&str; 5] = ["subject_id", "side", "density", "dense_voxels", "breast_voxels"];
pub const PROFILE_HEADER: [&str; 4] = ["index", "dense_voxels", "breast_voxels", "density"];

fn write_density_csv(path: &Path, records: &[DensityRecord]) -> Result<()> {
    let mut out = CsvOut::create(path)?;
    out.row(DENSITY_HEADER)?;
    for r in records {
        out.row([
            r.subject_id.clone(),
            r.side.to_string(),
            f6(r.density),
            r.dense_voxels.to_string(),
            r.breast_voxels.to_string(),
        ])?;
    }
    out.finish()
}

fn write_profile_csv(path: &Path, profile: &SliceProfile) -> Result<()> {
    let mut out = CsvOut::create(path)?;
    out.row(PROFILE_HEADER)?;
    for s in &profile.per_slice {
        out.row([
            s.index.to_string(),
            s.dense_voxels.to_string(),
            s.breast_voxels.to_string(),
            s.density.map(f6).unwrap_or_else(|| "NA".into()),
        ])?;
    }
    out.finish()
}

pub(super) fn quantify(a: &QuantifyArgs) -> Result<()> {
    let side = a.laterality()?.measured_side();
    let axis = a.axis()?;
    let breast = load_mask(&a.breast)?;
    let dense = load_mask(&a.dense)?;
    let (breast, dense) = measure(&breast, &dense, side)?;
    let record = compute_density(&dense, &breast)?.labeled(a.subject_id.clone(), side);
    write_density_csv(&a.out, std::slice::from_ref(&record))?;
    if let Some(path) = &a.profile {
        write_profile_csv(path, &slice_density_profile(&dense, &breast, axis)?)?;
    }
    println!(
        "{} {}  density {}  ({} / {} voxels)",
        record.subject_id,
        record.side,
        f6(record.density),
        record.dense_voxels,
        record.breast_voxels
    );
    Ok(())
}

fn convention(sample: bool) -> StdConvention {
    if sample {
        StdConvention::Sample
    } else {
        StdConvention::Population
    }
}

fn process_subject(
    entry: &ManifestEntry,
    cfg: &RunConfig,
    params: &SegmentParams,
    subjects_dir: &Path,
) -> Result<CohortRecord> {
    let format = match entry.kind {
        InputKind::DicomDir => InputFormat::Dicom,
        InputKind::Portable => InputFormat::Portable,
    };
    let volume = load_volume(&entry.input, format)?;
    let masks = segment_with(&volume, cfg, params)?;
    let dir = subjects_dir.join(&entry.subject_id);
    write_masks(&dir, &masks, volume.spacing())?;
    let side = cfg.laterality.measured_side();
    let (breast, dense) = measure(&masks.breast, &masks.dense, side)?;
    let record = compute_density(&dense, &breast)?.labeled(entry.subject_id.clone(), side);
    write_density_csv(&dir.join("density.csv"), std::slice::from_ref(&record))?;

    let mammo_category = match &entry.report {
        None => None,
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            match parse_density_category(&text) {
                Ok(c) => Some(c),
                Err(Error::UnknownCategory) => {
                    log::warn!("{}: no density category in {}", entry.subject_id, path.display());
                    None
                }
                Err(e) => return Err(e),
            }
        }
    };
    log::info!("{}: density {}", entry.subject_id, f6(record.density));
    Ok(CohortRecord {
        subject_id: entry.subject_id.clone(),
        dataset: entry.dataset,
        age: entry.age,
        density: record.density,
        mammo_category,
    })
}

fn run_manifest(path: &Path, config: Option<&Path>, out_dir: &Path) -> Result<Vec<CohortRecord>> {
    let cfg = load_config(config)?;
    let params = cfg.segment_params()?;
    let entries = read_manifest(path)?;
    let subjects_dir = out_dir.join("subjects");
    let records = entries
        .par_iter()
        .map(|e| process_subject(e, &cfg, &params, &subjects_dir))
        .collect::<Result<Vec<_>>>()?;
    let cohort_path = out_dir.join("cohort.csv");
    ensure_parent(&cohort_path)?;
    let file = File::create(&cohort_path).map_err(|e| Error::io(&cohort_path, e))?;
    write_cohort_csv(&records, file)?;
    Ok(records)
}

fn summary_row(label: &str, s: &Summary) -> Vec<String> {
    vec![
        label.to_owned(),
        s.n.to_string(),
        f6(s.mean),
        f6(s.std),
        f6(s.q1),
        f6(s.median),
        f6(s.q3),
    ]
}

pub(super) fn cohort(a: &CohortArgs) -> Result<()> {
    let records = match (&a.cohort, &a.manifest) {
        (_, Some(manifest)) => run_manifest(manifest, a.config.as_deref(), &a.out_dir)?,
        (Some(path), None) => read_cohort_csv(path)?,
        (None, None) => return Err(Error::Config("a cohort CSV or --manifest is required".into())),
    };
    let conv = convention(a.sample_std);

    let mut out = CsvOut::create(&a.out_dir.join("summary.csv"))?;
    out.row(["dataset", "n", "mean", "std"])?;
    for g in cohort_summary(&records, conv)? {
        out.row([g.dataset.to_string(), g.n.to_string(), f6(g.mean), f6(g.std)])?;
        println!("{:<10} n={:<5} {:.3} ± {:.3}", g.dataset, g.n, g.mean, g.std);
    }
    out.finish()?;

    let densities: Vec<f64> = records.iter().map(|r| r.density).collect();
    let hist = histogram(&densities, a.bin_width)?;
    let mut out = CsvOut::create(&a.out_dir.join("histogram.csv"))?;
    out.row(["bin_start", "bin_end", "count"])?;
    for (w, c) in hist.edges.windows(2).zip(&hist.counts) {
        out.row([f6(w[0]), f6(w[1]), c.to_string()])?;
    }
    out.finish()?;

    let ages = age_group_stats(&records, conv);
    let mut out = CsvOut::create(&a.out_dir.join("age_bins.csv"))?;
    out.row(["age_bin", "n", "mean", "std", "q1", "median", "q3"])?;
    for b in &ages.bins {
        out.row(summary_row(&b.label(), &b.summary))?;
    }
    out.finish()?;
    if ages.excluded > 0 {
        println!("{} records outside the 20-89 age bins", ages.excluded);
    }
    Ok(())
}

pub(super) fn correlate(a: &CorrelateArgs) -> Result<()> {
    let records = read_cohort_csv(&a.cohort)?;
    let paired: Vec<(f64, DensityCategory)> = records
        .iter()
        .filter_map(|r| r.mammo_category.map(|c| (r.density, c)))
        .collect();
    let x: Vec<f64> = paired.iter().map(|p| p.0).collect();
    let y: Vec<f64> = paired.iter().map(|p| p.1.rank() as f64).collect();
    let results = [spearman(&x, &y)?, kendall_tau(&x, &y)?];

    let mut out = CsvOut::create(&a.out_dir.join("correlation.csv"))?;
    out.row(["method", "coefficient", "p_value", "n"])?;
    for r in &results {
        out.row([
            r.method.to_string(),
            f6(r.coefficient),
            format!("{:.6e}", r.p_value),
            r.n.to_string(),
        ])?;
        println!("{:<9} {:.4}  p={:.3e}  n={}", r.method, r.coefficient, r.p_value, r.n);
    }
    out.finish()?;

    let conv = convention(a.sample_std);
    let mut out = CsvOut::create(&a.out_dir.join("categories.csv"))?;
    out.row(["category", "n", "mean", "std", "q1", "median", "q3"])?;
    for c in DensityCategory::ALL {
        let d: Vec<f64> = paired.iter().filter(|p| p.1 == c).map(|p| p.0).collect();
        if let Some(s) = Summary::of(&d, conv) {
            out.row(summary_row(c.as_str(), &s))?;
        }
    }
    out.finish()?;

    let (pos, neg) = (DensityCategory::HeterogeneouslyDense, DensityCategory::ScatteredFibroglandular);
    let binary: Vec<(f64, bool)> = paired
        .iter()
        .filter(|p| p.1 == pos || p.1 == neg)
        .map(|p| (p.0, p.1 == pos))
        .collect();
    let n_pos = binary.iter().filter(|b| b.1).count();
    if n_pos > 0 && n_pos < binary.len() {
        let scores: Vec<f64> = binary.iter().map(|b| b.0).collect();
        let labels: Vec<bool> = binary.iter().map(|b| b.1).collect();
        let auc = auc_binary(&scores, &labels)?;
        let mut out = CsvOut::create(&a.out_dir.join("auc.csv"))?;
        out.row(["positive", "negative", "auc", "n_positive", "n_negative"])?;
        out.row([
            pos.as_str().to_owned(),
            neg.as_str().to_owned(),
            f6(auc),
            n_pos.to_string(),
            (binary.len() - n_pos).to_string(),
        ])?;
        out.finish()?;
        println!("AUC {} vs {}: {auc:.4}", pos.as_str(), neg.as_str());
    }

    if a.classifier {
        let fit = fit_threshold_classifier(&records, a.split, a.seed)?;
        let [t1, t2, t3] = fit.classifier.thresholds();
        let mut out = CsvOut::create(&a.out_dir.join("classifier.csv"))?;
        out.row(["t1", "t2", "t3", "train_accuracy", "test_accuracy", "n_train", "n_test"])?;
        out.row([
            f6(t1),
            f6(t2),
            f6(t3),
            f6(fit.train_accuracy),
            f6(fit.test_accuracy),
            fit.n_train.to_string(),
            fit.n_test.to_string(),
        ])?;
        out.finish()?;
        println!(
            "thresholds {t1:.4} {t2:.4} {t3:.4}  train {:.2}%  test {:.2}%",
            100.0 * fit.train_accuracy,
            100.0 * fit.test_accuracy
        );
    }
    Ok(())
}

pub(super) fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let pred = load_mask(&a.pred)?;
    let (truth, spacing) = load_mask_with_spacing(&a.truth)?;
    let m = seg_metrics(&pred, &truth, a.spacing_weighted.then_some(spacing))?;
    println!("DSC {:.2}  HD {:.2}", 100.0 * m.dsc, m.hd);
    Ok(())
}

pub(super) fn parse_reports(a: &ParseReportsArgs) -> Result<()> {
    let reports = read_corpus(&a.corpus)?;
    let exceptions_path = a.exceptions.clone().unwrap_or_else(|| {
        a.out
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join("exceptions.csv")
    });
    let mut out = CsvOut::create(&a.out)?;
    let mut exceptions = CsvOut::create(&exceptions_path)?;
    out.row(["subject_id", "category"])?;
    exceptions.row(["subject_id", "reason"])?;
    let (mut parsed, mut missed) = (0, 0);
    for r in &reports {
        match parse_density_category(&r.text) {
            Ok(c) => {
                out.row([r.subject_id.as_str(), c.as_str()])?;
                parsed += 1;
            }
            Err(e @ Error::UnknownCategory) => {
                exceptions.row([r.subject_id.clone(), e.to_string()])?;
                missed += 1;
            }
            Err(e) => return Err(e),
        }
    }
    out.finish()?;
    exceptions.finish()?;
    println!("{parsed} categorized, {missed} exceptions");
    Ok(())
}

pub(super) fn phantom(a: &PhantomArgs) -> Result<()> {
    let mut spec = match &a.spec {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            toml::from_str::<PhantomSpec>(&text)
                .map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))?
        }
        None => PhantomSpec::default(),
    };
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    let p = generate_phantom(&spec)?;
    save_portable_volume(&p.volume, &a.out_dir.join("volume.json"))?;
    save_mask(&p.breast_truth, spec.spacing_mm, &a.out_dir.join("breast_truth.json"))?;
    save_mask(&p.dense_truth, spec.spacing_mm, &a.out_dir.join("dense_truth.json"))?;
    let voxelized = p.dense_truth.count() as f64 / p.breast_truth.count() as f64;
    println!("{}", describe(&p.volume));
    println!(
        "dense fraction  analytic {}  voxelized {}",
        f6(spec.analytic_dense_fraction()),
        f6(voxelized)
    );
    Ok(())
}
