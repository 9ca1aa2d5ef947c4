//! Run configuration: a TOML file whose fields can be overridden by flags.
//!
//! ```toml
//! patch_size = 96
//! steps = [8, 8, 3]
//! threshold = 0.5
//! laterality = "contralateral:left"
//!
//! [breast_backend]
//! kind = "fcm"
//!
//! [dense_backend]
//! kind = "fcm"
//! target = { cluster = 0 }
//! ```
//!
//! Relative `mask` / `probabilities` paths resolve against the config file's directory.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::load_mask;
use crate::quantify::Side;
use crate::segmentation::backend::{BackendSpec, ClusterTarget, FcmBackendConfig, ProbabilityMap};
use crate::segmentation::pipeline::SegmentParams;
use crate::segmentation::patches::{DEFAULT_PATCH_SIZE, DEFAULT_STEPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Breast,
    Dense,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendConfig {
    Fcm {
        /// Defaults to all-but-darkest for the breast stage and the darkest for dense.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target: Option<ClusterTarget>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        clusters: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fuzziness: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tol: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_iter: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_samples: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fill_holes: Option<bool>,
    },
    Oracle {
        mask: PathBuf,
    },
    Import {
        probabilities: PathBuf,
    },
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig::Fcm {
            target: None,
            clusters: None,
            fuzziness: None,
            tol: None,
            max_iter: None,
            max_samples: None,
            fill_holes: None,
        }
    }
}

impl FromStr for BackendConfig {
    type Err = Error;

    /// `fcm`, `oracle:<mask.json>` or `import:<probabilities.json>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "fcm" => Ok(BackendConfig::default()),
            Some(("oracle", p)) if !p.is_empty() => Ok(BackendConfig::Oracle { mask: p.into() }),
            Some(("import", p)) if !p.is_empty() => Ok(BackendConfig::Import {
                probabilities: p.into(),
            }),
            _ => Err(Error::Config(format!(
                "backend {s:?}: expected fcm, oracle:<path> or import:<path>"
            ))),
        }
    }
}

impl BackendConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            BackendConfig::Fcm { .. } => "fcm",
            BackendConfig::Oracle { .. } => "oracle",
            BackendConfig::Import { .. } => "import",
        }
    }

    fn rebase(&mut self, base: &Path) {
        match self {
            BackendConfig::Oracle { mask: p } | BackendConfig::Import { probabilities: p } => {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
            BackendConfig::Fcm { .. } => {}
        }
    }

    /// Loads any referenced files and fills stage defaults.
    pub fn resolve(&self, stage: Stage) -> Result<BackendSpec> {
        match self {
            BackendConfig::Fcm {
                target,
                clusters,
                fuzziness,
                tol,
                max_iter,
                max_samples,
                fill_holes,
            } => {
                let mut cfg = match stage {
                    Stage::Breast => FcmBackendConfig::breast(),
                    Stage::Dense => FcmBackendConfig::dense(),
                };
                if let Some(t) = target {
                    cfg.target = t.clone();
                }
                if let Some(c) = clusters {
                    cfg.params.clusters = *c;
                }
                if let Some(m) = fuzziness {
                    cfg.params.fuzziness = *m;
                }
                if let Some(t) = tol {
                    cfg.params.tol = *t;
                }
                if let Some(n) = max_iter {
                    cfg.params.max_iter = *n;
                }
                if let Some(n) = max_samples {
                    cfg.max_samples = *n;
                }
                if let Some(f) = fill_holes {
                    cfg.fill_holes = *f;
                }
                Ok(BackendSpec::Fcm(cfg))
            }
            BackendConfig::Oracle { mask } => Ok(BackendSpec::Oracle(load_mask(mask)?)),
            BackendConfig::Import { probabilities } => {
                Ok(BackendSpec::Import(ProbabilityMap::load(probabilities)?))
            }
        }
    }
}

/// Which breast is quantified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Laterality {
    #[default]
    Whole,
    Left,
    Right,
    /// The side opposite the given tumor side.
    Contralateral(Side),
}

impl Laterality {
    /// The side actually measured.
    pub fn measured_side(self) -> Side {
        match self {
            Laterality::Whole => Side::Whole,
            Laterality::Left => Side::Left,
            Laterality::Right => Side::Right,
            Laterality::Contralateral(tumor) => tumor.opposite(),
        }
    }
}

impl FromStr for Laterality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "whole" => Ok(Laterality::Whole),
            "left" => Ok(Laterality::Left),
            "right" => Ok(Laterality::Right),
            "contralateral:left" => Ok(Laterality::Contralateral(Side::Left)),
            "contralateral:right" => Ok(Laterality::Contralateral(Side::Right)),
            _ => Err(Error::Config(format!(
                "laterality {s:?}: expected whole, left, right or contralateral:<left|right>"
            ))),
        }
    }
}

impl fmt::Display for Laterality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Laterality::Whole => f.write_str("whole"),
            Laterality::Left => f.write_str("left"),
            Laterality::Right => f.write_str("right"),
            Laterality::Contralateral(side) => write!(f, "contralateral:{side}"),
        }
    }
}

impl TryFrom<String> for Laterality {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Laterality> for String {
    fn from(l: Laterality) -> String {
        l.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub patch_size: usize,
    pub steps: [usize; 3],
    pub threshold: f64,
    pub breast_backend: BackendConfig,
    pub dense_backend: BackendConfig,
    pub laterality: Laterality,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            patch_size: DEFAULT_PATCH_SIZE,
            steps: DEFAULT_STEPS,
            threshold: 0.5,
            breast_backend: BackendConfig::default(),
            dense_backend: BackendConfig::default(),
            laterality: Laterality::Whole,
            out_dir: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        cfg.breast_backend.rebase(base);
        cfg.dense_backend.rebase(base);
        if let Some(dir) = &mut cfg.out_dir {
            if dir.is_relative() {
                *dir = base.join(&*dir);
            }
        }
        Ok(cfg)
    }

    pub fn segment_params(&self) -> Result<SegmentParams> {
        let params = SegmentParams {
            patch_size: self.patch_size,
            steps: self.steps,
            threshold: self.threshold,
        };
        params.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(params)
    }
}
