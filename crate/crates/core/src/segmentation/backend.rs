//! Patch predictors plugged into sliding-window inference.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::portable::{load_portable_volume, PortableHeader};
use crate::segmentation::fcm::{fcm_fit, fcm_predict_values, FcmModel, FcmParams};
use crate::segmentation::normalize::NormStats;
use crate::volume::{linear_index, BinaryMask3D, Dims, Volume3D};

/// Out-of-range tolerance for imported probabilities; values within it are clamped.
pub const IMPORT_CLAMP_TOL: f64 = 1e-3;

/// A cubic patch cut from the (zero-padded) input volume.
#[derive(Debug, Clone)]
pub struct Patch {
    pub size: usize,
    pub origin: [usize; 3],
    /// x-fastest, `size^3` values.
    pub voxels: Vec<f64>,
}

impl Patch {
    /// Copies the patch at `origin`; voxels beyond `volume`'s extent read as `pad`.
    pub fn extract(volume: &[f64], dims: Dims, origin: [usize; 3], size: usize, pad: f64) -> Self {
        let mut voxels = vec![pad; size * size * size];
        for dz in 0..size {
            let z = origin[2] + dz;
            if z >= dims[2] {
                break;
            }
            for dy in 0..size {
                let y = origin[1] + dy;
                if y >= dims[1] {
                    break;
                }
                let x_end = (origin[0] + size).min(dims[0]);
                if origin[0] >= x_end {
                    continue;
                }
                let src = linear_index(dims, origin[0], y, z);
                let dst = size * (dy + size * dz);
                let n = x_end - origin[0];
                voxels[dst..dst + n].copy_from_slice(&volume[src..src + n]);
            }
        }
        Patch {
            size,
            origin,
            voxels,
        }
    }
}

/// Maps an input patch to a probability patch of identical size with values in [0, 1].
pub trait PatchBackend: Send + Sync {
    fn kind(&self) -> &'static str;
    fn predict(&self, patch: &Patch) -> Result<Vec<f64>>;
}

/// Which FCM clusters make up the foreground probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterTarget {
    /// Membership of one cluster (index into ascending centroids).
    Cluster(usize),
    /// One minus the membership of this cluster.
    AllExcept(usize),
    /// The cluster whose centroid is nearest this raw intensity.
    NearestIntensity(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FcmBackendConfig {
    #[serde(default, flatten)]
    pub params: FcmParams,
    pub target: ClusterTarget,
    /// Upper bound on voxels used for fitting (uniform stride).
    #[serde(default = "default_max_samples")]
    pub max_samples: usize,
    /// Close cavities in the binarized mask.
    #[serde(default)]
    pub fill_holes: bool,
}

fn default_max_samples() -> usize {
    1 << 20
}

impl FcmBackendConfig {
    /// Air against tissue over the whole volume.
    ///
    /// Dense tissue sits between air and fat on non-fat-suppressed T1, so
    /// part of it can fall on the air side; it is enclosed by fat, and
    /// filling holes recovers it. Three clusters would be the natural
    /// model, but when air dominates the volume the objective prefers
    /// splitting the air over finding the small dense class.
    pub fn breast() -> Self {
        FcmBackendConfig {
            params: FcmParams {
                clusters: 2,
                ..FcmParams::default()
            },
            target: ClusterTarget::AllExcept(0),
            max_samples: default_max_samples(),
            fill_holes: true,
        }
    }

    /// Dense against fat, fitted on breast voxels only; dense is the darker cluster.
    pub fn dense() -> Self {
        FcmBackendConfig {
            params: FcmParams {
                clusters: 2,
                ..FcmParams::default()
            },
            target: ClusterTarget::Cluster(0),
            max_samples: default_max_samples(),
            fill_holes: false,
        }
    }
}

/// Probability map read from disk for the import backend.
#[derive(Debug, Clone)]
pub struct ProbabilityMap {
    pub dims: Dims,
    pub probs: Vec<f64>,
}

impl ProbabilityMap {
    pub fn new(dims: Dims, probs: Vec<f64>) -> Result<Self> {
        let probs = probs
            .into_iter()
            .enumerate()
            .map(|(i, p)| clamp_probability(p).ok_or_else(|| {
                Error::Backend(format!("imported probability {p} at voxel {i} outside [0, 1]"))
            }))
            .collect::<Result<Vec<_>>>()?;
        if probs.len() != dims.iter().product::<usize>() {
            return Err(Error::ElementCount {
                expected: dims.iter().product(),
                found: probs.len(),
            });
        }
        Ok(ProbabilityMap { dims, probs })
    }

    /// Reads an f32 portable volume of probabilities.
    pub fn load(path: &Path) -> Result<Self> {
        let header = PortableHeader::read(path)?;
        if header.dtype != crate::io::portable::Dtype::F32 {
            return Err(Error::UnsupportedDtype(format!(
                "{:?} (probability maps must be f32)",
                header.dtype
            )));
        }
        let v = load_portable_volume(path)?;
        let dims = v.dims();
        let raw = v.into_voxels();
        let clamped = raw.iter().filter(|&&p| !(0.0..=1.0).contains(&p)).count();
        if clamped > 0 && raw.iter().all(|&p| clamp_probability(p).is_some()) {
            log::warn!(
                "{}: clamped {clamped} probabilities within {IMPORT_CLAMP_TOL} of [0, 1]",
                path.display()
            );
        }
        Self::new(dims, raw)
    }
}

fn clamp_probability(p: f64) -> Option<f64> {
    if (-IMPORT_CLAMP_TOL..=1.0 + IMPORT_CLAMP_TOL).contains(&p) {
        Some(p.clamp(0.0, 1.0))
    } else {
        None
    }
}

/// Backend selection for one segmentation stage.
#[derive(Debug, Clone)]
pub enum BackendSpec {
    /// Fuzzy c-means fitted on the normalized subject volume.
    Fcm(FcmBackendConfig),
    /// Replays a known mask.
    Oracle(BinaryMask3D),
    /// Replays an externally computed probability map.
    Import(ProbabilityMap),
}

impl BackendSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            BackendSpec::Fcm(_) => "fcm",
            BackendSpec::Oracle(_) => "oracle",
            BackendSpec::Import(_) => "import",
        }
    }

    /// Whether the binarized mask of this stage gets its cavities closed.
    pub fn fills_holes(&self) -> bool {
        matches!(self, BackendSpec::Fcm(cfg) if cfg.fill_holes)
    }

    /// Builds the patch predictor for a normalized volume.
    ///
    /// `stats` are the normalization statistics, used to map raw calibration
    /// intensities into normalized units. Fitted backends only learn from
    /// voxels inside `region` when one is given.
    pub fn prepare(
        &self,
        normalized: &Volume3D,
        stats: &NormStats,
        region: Option<&BinaryMask3D>,
    ) -> Result<Box<dyn PatchBackend>> {
        match self {
            BackendSpec::Fcm(cfg) => {
                let backend = match region {
                    Some(r) => {
                        check_dims(r.dims(), normalized.dims())?;
                        let inside: Vec<f64> = normalized
                            .voxels()
                            .iter()
                            .zip(r.voxels())
                            .filter(|(_, &m)| m == 1)
                            .map(|(&v, _)| v)
                            .collect();
                        FcmBackend::fit(cfg, &inside, stats)?
                    }
                    None => FcmBackend::fit(cfg, normalized.voxels(), stats)?,
                };
                Ok(Box::new(backend))
            }
            BackendSpec::Oracle(mask) => {
                check_dims(mask.dims(), normalized.dims())?;
                Ok(Box::new(OracleBackend::new(mask.clone())))
            }
            BackendSpec::Import(map) => {
                check_dims(map.dims, normalized.dims())?;
                Ok(Box::new(ImportBackend { map: map.clone() }))
            }
        }
    }
}

fn check_dims(backend: Dims, volume: Dims) -> Result<()> {
    if backend != volume {
        return Err(Error::DimsMismatch {
            left: backend,
            right: volume,
        });
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct FcmBackend {
    pub model: FcmModel,
    pub targets: Vec<usize>,
}

impl FcmBackend {
    pub fn fit(cfg: &FcmBackendConfig, normalized: &[f64], stats: &NormStats) -> Result<Self> {
        let stride = normalized.len().div_ceil(cfg.max_samples.max(1)).max(1);
        let sample: Vec<f64> = normalized.iter().step_by(stride).copied().collect();
        let model = fcm_fit(&sample, &cfg.params)?;
        let c = model.clusters();
        let targets = match cfg.target {
            ClusterTarget::Cluster(j) => vec![j],
            ClusterTarget::AllExcept(j) => (0..c).filter(|&k| k != j).collect(),
            ClusterTarget::NearestIntensity(raw) => vec![model.nearest_cluster(stats.apply(raw))],
        };
        if let Some(&bad) = targets.iter().find(|&&t| t >= c) {
            return Err(Error::InvalidParameter(format!(
                "cluster index {bad} out of range for {c} clusters"
            )));
        }
        log::debug!(
            "fcm fit: centroids {:?} after {} iterations, targets {targets:?}",
            model.centroids(),
            model.iterations()
        );
        Ok(FcmBackend { model, targets })
    }
}

impl PatchBackend for FcmBackend {
    fn kind(&self) -> &'static str {
        "fcm"
    }

    fn predict(&self, patch: &Patch) -> Result<Vec<f64>> {
        fcm_predict_values(&self.model, &patch.voxels, &self.targets)
    }
}

#[derive(Debug, Clone)]
pub struct OracleBackend {
    values: Vec<f64>,
    dims: Dims,
}

impl OracleBackend {
    pub fn new(mask: BinaryMask3D) -> Self {
        OracleBackend {
            values: mask.voxels().iter().map(|&v| v as f64).collect(),
            dims: mask.dims(),
        }
    }
}

impl PatchBackend for OracleBackend {
    fn kind(&self) -> &'static str {
        "oracle"
    }

    fn predict(&self, patch: &Patch) -> Result<Vec<f64>> {
        Ok(Patch::extract(&self.values, self.dims, patch.origin, patch.size, 0.0).voxels)
    }
}

#[derive(Debug, Clone)]
pub struct ImportBackend {
    map: ProbabilityMap,
}

impl PatchBackend for ImportBackend {
    fn kind(&self) -> &'static str {
        "import"
    }

    fn predict(&self, patch: &Patch) -> Result<Vec<f64>> {
        Ok(Patch::extract(&self.map.probs, self.map.dims, patch.origin, patch.size, 0.0).voxels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extract_pads_past_the_edge() {
        let dims = [2, 2, 1];
        let p = Patch::extract(&[1.0, 2.0, 3.0, 4.0], dims, [1, 0, 0], 2, -9.0);
        assert_eq!(p.voxels, vec![2.0, -9.0, 4.0, -9.0, -9.0, -9.0, -9.0, -9.0]);
    }

    #[test]
    fn import_clamps_small_excursions_and_rejects_large_ones() {
        let map = ProbabilityMap::new([3, 1, 1], vec![-0.0005, 0.5, 1.0008]).unwrap();
        assert_eq!(map.probs, vec![0.0, 0.5, 1.0]);
        assert!(matches!(
            ProbabilityMap::new([1, 1, 1], vec![1.01]),
            Err(Error::Backend(_))
        ));
    }

    #[test]
    fn fcm_targets_resolve() {
        let xs: Vec<f64> = (0..300).map(|i| [0.0, 50.0, 100.0][i % 3]).collect();
        let stats = NormStats { mean: 0.0, std: 1.0 };
        let three = FcmParams {
            clusters: 3,
            ..FcmParams::default()
        };
        let cfg = FcmBackendConfig {
            params: three,
            ..FcmBackendConfig::breast()
        };
        assert_eq!(FcmBackend::fit(&cfg, &xs, &stats).unwrap().targets, vec![1, 2]);
        let cfg = FcmBackendConfig {
            params: three,
            target: ClusterTarget::NearestIntensity(95.0),
            ..FcmBackendConfig::dense()
        };
        assert_eq!(FcmBackend::fit(&cfg, &xs, &stats).unwrap().targets, vec![2]);
        let cfg = FcmBackendConfig {
            target: ClusterTarget::Cluster(5),
            ..FcmBackendConfig::dense()
        };
        assert!(FcmBackend::fit(&cfg, &xs, &stats).is_err());
    }
}
