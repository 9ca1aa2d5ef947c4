use serde::Serialize;

use crate::volume::Dims;

pub const DEFAULT_PATCH_SIZE: usize = 96;
pub const DEFAULT_STEPS: [usize; 3] = [8, 8, 3];

/// Patch origins for sliding-window inference.
///
/// Axes shorter than the patch are zero-padded at the high end, so every
/// origin lies in `[0, max(dim, patch) - patch]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PatchPlan {
    pub patch_size: usize,
    pub steps: [usize; 3],
    pub dims: Dims,
    pub padded_dims: Dims,
    pub origins: Vec<[usize; 3]>,
}

impl PatchPlan {
    pub fn len(&self) -> usize {
        self.origins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.origins.is_empty()
    }

    /// Number of patches covering each voxel of the unpadded volume.
    pub fn coverage(&self) -> Vec<u32> {
        let [nx, ny, nz] = self.dims;
        let mut cov = vec![0u32; nx * ny * nz];
        let p = self.patch_size;
        for o in &self.origins {
            for z in o[2]..(o[2] + p).min(nz) {
                for y in o[1]..(o[1] + p).min(ny) {
                    let row = nx * (y + ny * z);
                    for x in o[0]..(o[0] + p).min(nx) {
                        cov[row + x] += 1;
                    }
                }
            }
        }
        cov
    }
}

/// Evenly spaced origins along one axis, rounded to the nearest voxel and deduplicated.
pub fn axis_origins(dim: usize, patch_size: usize, steps: usize) -> Vec<usize> {
    let padded = dim.max(patch_size);
    let span = padded - patch_size;
    if steps <= 1 || span == 0 {
        return vec![0];
    }
    let mut out: Vec<usize> = (0..steps)
        .map(|i| {
            let o = (i as f64 * span as f64 / (steps - 1) as f64).round() as usize;
            o.min(span)
        })
        .collect();
    out.dedup();
    out
}

/// Plans patch origins for a volume of `dims`.
///
/// `patch_size` and every step count must be at least 1.
pub fn plan_patches(dims: Dims, patch_size: usize, steps: [usize; 3]) -> PatchPlan {
    assert!(patch_size >= 1, "patch_size must be >= 1");
    assert!(steps.iter().all(|&s| s >= 1), "steps must be >= 1");
    let per_axis: Vec<Vec<usize>> = (0..3)
        .map(|k| axis_origins(dims[k], patch_size, steps[k]))
        .collect();
    let mut origins = Vec::with_capacity(per_axis.iter().map(Vec::len).product());
    for &z in &per_axis[2] {
        for &y in &per_axis[1] {
            for &x in &per_axis[0] {
                origins.push([x, y, z]);
            }
        }
    }
    PatchPlan {
        patch_size,
        steps,
        dims,
        padded_dims: dims.map(|d| d.max(patch_size)),
        origins,
    }
}
