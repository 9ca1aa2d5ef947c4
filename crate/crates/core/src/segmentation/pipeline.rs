//! Two-stage breast / dense-tissue segmentation of one subject.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segmentation::backend::BackendSpec;
use crate::segmentation::fusion::{binarize, run_sliding_window};
use crate::segmentation::normalize::zscore_normalize_with_stats;
use crate::segmentation::patches::{plan_patches, DEFAULT_PATCH_SIZE, DEFAULT_STEPS};
use crate::volume::{BinaryMask3D, Volume3D};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentParams {
    pub patch_size: usize,
    pub steps: [usize; 3],
    pub threshold: f64,
}

impl Default for SegmentParams {
    fn default() -> Self {
        SegmentParams {
            patch_size: DEFAULT_PATCH_SIZE,
            steps: DEFAULT_STEPS,
            threshold: 0.5,
        }
    }
}

impl SegmentParams {
    pub fn validate(&self) -> Result<()> {
        if self.patch_size == 0 {
            return Err(Error::InvalidParameter("patch_size must be >= 1".into()));
        }
        if self.steps.iter().any(|&s| s == 0) {
            return Err(Error::InvalidParameter("steps must be >= 1".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "threshold must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SubjectMasks {
    pub breast: BinaryMask3D,
    /// Already intersected with `breast`.
    pub dense: BinaryMask3D,
    pub patch_count: usize,
}

/// normalize -> plan -> sliding window -> binarize, once per stage; the dense
/// mask is then restricted to the breast mask.
pub fn segment_subject(
    volume: &Volume3D,
    breast_backend: &BackendSpec,
    dense_backend: &BackendSpec,
    params: &SegmentParams,
) -> Result<SubjectMasks> {
    params.validate()?;
    let (normalized, stats) = zscore_normalize_with_stats(volume)?;
    let plan = plan_patches(normalized.dims(), params.patch_size, params.steps);

    let stage = |spec: &BackendSpec, region: Option<&BinaryMask3D>| -> Result<BinaryMask3D> {
        let backend = spec.prepare(&normalized, &stats, region)?;
        let probs = run_sliding_window(&normalized, backend.as_ref(), &plan)?;
        let mask = binarize(&probs, params.threshold)?;
        Ok(if spec.fills_holes() { mask.fill_holes() } else { mask })
    };
    let breast = stage(breast_backend, None)?;
    // The dense stage learns from breast voxels only.
    let dense = stage(dense_backend, Some(&breast))?.and(&breast)?;
    Ok(SubjectMasks {
        breast,
        dense,
        patch_count: plan.len(),
    })
}

/// Splits a mask at the midsagittal plane `x = nx / 2`.
///
/// In LPS, +x points to the patient's left, so indices `>= nx / 2` form the
/// left side. Returns `(left, right)`.
pub fn split_laterality(mask: &BinaryMask3D) -> (BinaryMask3D, BinaryMask3D) {
    let mid = mask.dims()[0] / 2;
    let left = BinaryMask3D::from_fn(mask.dims(), |x, y, z| x >= mid && mask.get(x, y, z));
    let right = BinaryMask3D::from_fn(mask.dims(), |x, y, z| x < mid && mask.get(x, y, z));
    (left, right)
}
