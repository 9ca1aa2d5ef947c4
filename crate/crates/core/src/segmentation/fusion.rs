//! Sliding-window inference with equal-weight fusion.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::segmentation::backend::{Patch, PatchBackend};
use crate::segmentation::patches::PatchPlan;
use crate::volume::{BinaryMask3D, Dims, Volume3D};

/// Fused per-voxel probabilities and the number of patches behind each.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVolume {
    pub dims: Dims,
    pub probs: Vec<f64>,
    pub coverage: Vec<u32>,
}

/// Runs `backend` over every planned patch and averages overlapping predictions.
///
/// Predictions may be computed in parallel; accumulation happens on one
/// thread in plan order, in f64, as a running mean so that agreeing
/// predictions fuse to exactly their common value.
pub fn run_sliding_window(
    volume: &Volume3D,
    backend: &dyn PatchBackend,
    plan: &PatchPlan,
) -> Result<ProbabilityVolume> {
    let dims = volume.dims();
    if plan.dims != dims {
        return Err(Error::DimsMismatch {
            left: plan.dims,
            right: dims,
        });
    }
    let p = plan.patch_size;
    let n = dims.iter().product::<usize>();
    let mut mean = vec![0f64; n];
    let mut coverage = vec![0u32; n];

    // Bounded batches keep at most a few patches per worker in memory.
    let batch = (rayon::current_num_threads() * 2).max(1);
    for chunk in plan.origins.chunks(batch) {
        let predictions: Vec<Result<Vec<f64>>> = chunk
            .par_iter()
            .map(|&origin| {
                let patch = Patch::extract(volume.voxels(), dims, origin, p, 0.0);
                let pred = backend.predict(&patch)?;
                validate_prediction(backend, &pred, p, origin)?;
                Ok(pred)
            })
            .collect();
        for (&origin, pred) in chunk.iter().zip(predictions) {
            accumulate(&mut mean, &mut coverage, dims, origin, p, &pred?);
        }
    }

    if let Some(i) = coverage.iter().position(|&c| c == 0) {
        return Err(Error::InvalidParameter(format!(
            "patch plan leaves voxel {i} uncovered"
        )));
    }
    Ok(ProbabilityVolume {
        dims,
        probs: mean,
        coverage,
    })
}

fn validate_prediction(
    backend: &dyn PatchBackend,
    pred: &[f64],
    size: usize,
    origin: [usize; 3],
) -> Result<()> {
    if pred.len() != size * size * size {
        return Err(Error::Backend(format!(
            "{} backend returned {} values for a {size}^3 patch at {origin:?}",
            backend.kind(),
            pred.len()
        )));
    }
    if let Some(v) = pred.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Backend(format!(
            "{} backend returned out-of-range probability {v} at {origin:?}",
            backend.kind()
        )));
    }
    Ok(())
}

fn accumulate(
    mean: &mut [f64],
    coverage: &mut [u32],
    dims: Dims,
    origin: [usize; 3],
    size: usize,
    pred: &[f64],
) {
    let [nx, ny, nz] = dims;
    for dz in 0..size.min(nz.saturating_sub(origin[2])) {
        for dy in 0..size.min(ny.saturating_sub(origin[1])) {
            let w = size.min(nx.saturating_sub(origin[0]));
            let dst = origin[0] + nx * (origin[1] + dy + ny * (origin[2] + dz));
            let src = size * (dy + size * dz);
            for dx in 0..w {
                let i = dst + dx;
                coverage[i] += 1;
                mean[i] += (pred[src + dx] - mean[i]) / coverage[i] as f64;
            }
        }
    }
}

/// Voxel is foreground iff its probability is at least `threshold`.
pub fn binarize(probs: &ProbabilityVolume, threshold: f64) -> Result<BinaryMask3D> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold must lie in (0, 1), got {threshold}"
        )));
    }
    let voxels = probs.probs.iter().map(|&p| (p >= threshold) as u8).collect();
    BinaryMask3D::new(probs.dims, voxels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmentation::patches::plan_patches;
    use proptest::prelude::*;

    /// Predicts a fixed value per patch, keyed by origin.
    struct PerPatch(Vec<([usize; 3], f64)>);

    impl PatchBackend for PerPatch {
        fn kind(&self) -> &'static str {
            "per-patch"
        }
        fn predict(&self, patch: &Patch) -> Result<Vec<f64>> {
            let v = self
                .0
                .iter()
                .find(|(o, _)| *o == patch.origin)
                .map(|(_, v)| *v)
                .unwrap();
            Ok(vec![v; patch.size.pow(3)])
        }
    }

    struct Broken(usize, f64);

    impl PatchBackend for Broken {
        fn kind(&self) -> &'static str {
            "broken"
        }
        fn predict(&self, _: &Patch) -> Result<Vec<f64>> {
            Ok(vec![self.1; self.0])
        }
    }

    fn zeros(dims: Dims) -> Volume3D {
        Volume3D::filled(dims, [1.0; 3], 0.0).unwrap()
    }

    fn plan(dims: Dims, p: usize, origins: Vec<[usize; 3]>) -> PatchPlan {
        PatchPlan {
            patch_size: p,
            steps: [1; 3],
            dims,
            padded_dims: dims.map(|d| d.max(p)),
            origins,
        }
    }

    #[test]
    fn overlap_of_zero_and_one_is_half() {
        let dims = [6, 4, 4];
        let pl = plan(dims, 4, vec![[0, 0, 0], [2, 0, 0]]);
        let b = PerPatch(vec![([0, 0, 0], 0.0), ([2, 0, 0], 1.0)]);
        let out = run_sliding_window(&zeros(dims), &b, &pl).unwrap();
        assert_eq!(out.probs[0], 0.0);
        assert_eq!(out.probs[2], 0.5);
        assert_eq!(out.probs[3], 0.5);
        assert_eq!(out.probs[5], 1.0);
        assert_eq!(out.coverage[2], 2);
    }

    #[test]
    fn three_way_overlap_is_the_mean() {
        let dims = [5, 3, 3];
        let pl = plan(dims, 3, vec![[0, 0, 0], [1, 0, 0], [2, 0, 0]]);
        let b = PerPatch(vec![([0, 0, 0], 0.2), ([1, 0, 0], 0.4), ([2, 0, 0], 0.9)]);
        let out = run_sliding_window(&zeros(dims), &b, &pl).unwrap();
        assert!((out.probs[2] - 0.5).abs() < 1e-15);
        assert_eq!(out.coverage[2], 3);
    }

    #[test]
    fn padded_region_is_discarded() {
        let dims = [3, 2, 2];
        let pl = plan_patches(dims, 4, [8, 8, 3]);
        let b = PerPatch(vec![([0, 0, 0], 0.25)]);
        let out = run_sliding_window(&zeros(dims), &b, &pl).unwrap();
        assert_eq!(out.dims, dims);
        assert_eq!(out.probs, vec![0.25; 12]);
    }

    #[test]
    fn backend_contract_violations() {
        let dims = [4, 4, 4];
        let pl = plan_patches(dims, 4, [1, 1, 1]);
        assert!(matches!(
            run_sliding_window(&zeros(dims), &Broken(10, 0.5), &pl),
            Err(Error::Backend(_))
        ));
        assert!(matches!(
            run_sliding_window(&zeros(dims), &Broken(64, 1.5), &pl),
            Err(Error::Backend(_))
        ));
    }

    #[test]
    fn binarize_rules() {
        let pv = ProbabilityVolume {
            dims: [4, 1, 1],
            probs: vec![0.2, 0.6, 0.49999, 0.5],
            coverage: vec![1; 4],
        };
        assert_eq!(binarize(&pv, 0.5).unwrap().voxels(), &[0, 1, 0, 1]);
        let zero = ProbabilityVolume {
            probs: vec![0.0; 4],
            ..pv.clone()
        };
        assert!(binarize(&zero, 0.5).unwrap().is_empty());
        assert!(binarize(&pv, 1.5).is_err());
        assert!(binarize(&pv, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn fusion_is_order_independent(vals in prop::collection::vec(0.0f64..1.0, 6), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let dims = [7, 5, 4];
            let origins = vec![[0, 0, 0], [1, 0, 0], [2, 1, 0], [3, 1, 0], [0, 1, 0], [3, 0, 0]];
            let b = PerPatch(origins.iter().copied().zip(vals).collect());
            let a = run_sliding_window(&zeros(dims), &b, &plan(dims, 4, origins.clone())).unwrap();
            let mut shuffled = origins;
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let c = run_sliding_window(&zeros(dims), &b, &plan(dims, 4, shuffled)).unwrap();
            for (x, y) in a.probs.iter().zip(&c.probs) {
                prop_assert!((x - y).abs() < 1e-6);
            }
        }
    }
}
