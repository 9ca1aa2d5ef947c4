use crate::error::{Error, Result};
use crate::volume::Volume3D;

/// Population mean and standard deviation of a volume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormStats {
    pub mean: f64,
    pub std: f64,
}

impl NormStats {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "normalization needs at least 2 voxels, found {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        if !(std > 1e-12) {
            return Err(Error::ZeroVariance(std));
        }
        Ok(NormStats { mean, std })
    }

    pub fn apply(&self, x: f64) -> f64 {
        (x - self.mean) / self.std
    }
}

/// Per-volume z-score: `(x - mean) / std` with the population std.
pub fn zscore_normalize(volume: &Volume3D) -> Result<Volume3D> {
    zscore_normalize_with_stats(volume).map(|(v, _)| v)
}

pub fn zscore_normalize_with_stats(volume: &Volume3D) -> Result<(Volume3D, NormStats)> {
    let stats = NormStats::of(volume.voxels())?;
    let voxels = volume.voxels().iter().map(|&x| stats.apply(x)).collect();
    Ok((volume.with_voxels(voxels)?, stats))
}
