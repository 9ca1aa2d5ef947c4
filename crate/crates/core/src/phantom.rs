//! Synthetic breast phantoms with analytically known masks.
//!
//! The breast is the half of an ellipsoid with `y >= center.y`; the plane
//! `y = center.y` plays the chest wall. The dense region is a full ellipsoid
//! that must sit inside the breast. Voxel centers sit at integer indices.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{BinaryMask3D, Dims, Volume3D};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    /// Center in voxel coordinates.
    pub center: [f64; 3],
    /// Semi-axes in voxels.
    pub semi_axes: [f64; 3],
}

impl Ellipsoid {
    pub fn contains(&self, p: [f64; 3]) -> bool {
        let mut r = 0.0;
        for k in 0..3 {
            let d = (p[k] - self.center[k]) / self.semi_axes[k];
            r += d * d;
        }
        r <= 1.0
    }

    pub fn analytic_volume(&self) -> f64 {
        4.0 / 3.0 * std::f64::consts::PI * self.semi_axes.iter().product::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomSpec {
    pub dims: Dims,
    #[serde(default = "default_spacing")]
    pub spacing_mm: [f64; 3],
    pub breast_shape: Ellipsoid,
    pub dense_shape: Ellipsoid,
    pub intensity_fat: f64,
    pub intensity_dense: f64,
    pub intensity_background: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

fn default_spacing() -> [f64; 3] {
    [1.0; 3]
}

impl Default for PhantomSpec {
    fn default() -> Self {
        PhantomSpec {
            dims: [64, 64, 48],
            spacing_mm: default_spacing(),
            breast_shape: Ellipsoid {
                center: [31.5, 8.0, 23.5],
                semi_axes: [26.0, 48.0, 20.0],
            },
            dense_shape: Ellipsoid {
                center: [31.5, 28.0, 23.5],
                semi_axes: [12.0, 14.0, 9.0],
            },
            intensity_fat: 100.0,
            intensity_dense: 50.0,
            intensity_background: 0.0,
            noise_sigma: 5.0,
            seed: 42,
        }
    }
}

impl PhantomSpec {
    pub fn breast_contains(&self, p: [f64; 3]) -> bool {
        p[1] >= self.breast_shape.center[1] && self.breast_shape.contains(p)
    }

    /// Analytic half-ellipsoid volume (voxels).
    pub fn analytic_breast_volume(&self) -> f64 {
        self.breast_shape.analytic_volume() / 2.0
    }

    pub fn analytic_dense_fraction(&self) -> f64 {
        self.dense_shape.analytic_volume() / self.analytic_breast_volume()
    }

    fn validate(&self) -> Result<()> {
        if self.dims.contains(&0) {
            return Err(Error::InvalidPhantom(format!("zero dims {:?}", self.dims)));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidPhantom(format!(
                "noise_sigma must be >= 0, got {}",
                self.noise_sigma
            )));
        }
        if self.intensity_dense == self.intensity_fat {
            return Err(Error::InvalidPhantom(
                "intensity_dense must differ from intensity_fat".into(),
            ));
        }
        for (name, e) in [("breast", &self.breast_shape), ("dense", &self.dense_shape)] {
            if e.semi_axes.iter().any(|&a| !(a > 0.0)) {
                return Err(Error::InvalidPhantom(format!(
                    "{name} semi-axes must be positive"
                )));
            }
        }
        // The half-ellipsoid's bounding box must lie inside the grid.
        let b = &self.breast_shape;
        let lo = [b.center[0] - b.semi_axes[0], b.center[1], b.center[2] - b.semi_axes[2]];
        let hi = [
            b.center[0] + b.semi_axes[0],
            b.center[1] + b.semi_axes[1],
            b.center[2] + b.semi_axes[2],
        ];
        for k in 0..3 {
            if lo[k] < 0.0 || hi[k] > (self.dims[k] - 1) as f64 {
                return Err(Error::InvalidPhantom(format!(
                    "dims {:?} too small for breast shape along axis {k} ([{}, {}])",
                    self.dims, lo[k], hi[k]
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Phantom {
    pub volume: Volume3D,
    pub breast_truth: BinaryMask3D,
    pub dense_truth: BinaryMask3D,
}

/// Generates the phantom volume and its two truth masks.
///
/// Intensities are rounded to f32 precision so the portable format stores
/// them exactly.
pub fn generate_phantom(spec: &PhantomSpec) -> Result<Phantom> {
    spec.validate()?;
    let dims = spec.dims;
    let breast = BinaryMask3D::from_fn(dims, |x, y, z| {
        spec.breast_contains([x as f64, y as f64, z as f64])
    });
    let dense = BinaryMask3D::from_fn(dims, |x, y, z| {
        spec.dense_shape.contains([x as f64, y as f64, z as f64])
    });
    let outside = dense.and_not(&breast)?.count();
    if outside > 0 {
        return Err(Error::InvalidPhantom(format!(
            "dense shape not contained in breast shape ({outside} voxels outside)"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sigma)
        .map_err(|e| Error::InvalidPhantom(e.to_string()))?;
    let voxels = breast
        .voxels()
        .iter()
        .zip(dense.voxels())
        .map(|(&b, &d)| {
            let mean = match (b, d) {
                (_, 1) => spec.intensity_dense,
                (1, _) => spec.intensity_fat,
                _ => spec.intensity_background,
            };
            let n = if spec.noise_sigma > 0.0 {
                noise.sample(&mut rng)
            } else {
                0.0
            };
            (mean + n) as f32 as f64
        })
        .collect();
    let volume = Volume3D::new(dims, spec.spacing_mm, voxels)?;
    Ok(Phantom {
        volume,
        breast_truth: breast,
        dense_truth: dense,
    })
}
