//! In-memory volume and mask types shared by every pipeline stage.
//!
//! Voxels are stored x-fastest: the linear index of `(x, y, z)` is
//! `x + nx * (y + ny * z)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Voxel counts per axis `(nx, ny, nz)`.
pub type Dims = [usize; 3];

#[inline]
pub fn voxel_count(dims: Dims) -> usize {
    dims[0] * dims[1] * dims[2]
}

#[inline]
pub fn linear_index(dims: Dims, x: usize, y: usize, z: usize) -> usize {
    x + dims[0] * (y + dims[1] * z)
}

/// Canonical patient frame of a volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Orientation {
    /// +x toward patient left, +y posterior, +z superior.
    #[default]
    #[serde(rename = "LPS")]
    Lps,
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Orientation::Lps => f.write_str("LPS"),
        }
    }
}

/// Scalar 3D image.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume3D {
    dims: Dims,
    spacing: [f64; 3],
    orientation: Orientation,
    voxels: Vec<f64>,
}

impl Volume3D {
    pub fn new(dims: Dims, spacing: [f64; 3], voxels: Vec<f64>) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidVolume(format!("zero-sized dims {dims:?}")));
        }
        if spacing.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidVolume(format!(
                "spacing must be positive, got {spacing:?}"
            )));
        }
        if voxels.len() != voxel_count(dims) {
            return Err(Error::ElementCount {
                expected: voxel_count(dims),
                found: voxels.len(),
            });
        }
        Ok(Volume3D {
            dims,
            spacing,
            orientation: Orientation::Lps,
            voxels,
        })
    }

    pub fn filled(dims: Dims, spacing: [f64; 3], value: f64) -> Result<Self> {
        Self::new(dims, spacing, vec![value; voxel_count(dims)])
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn voxels(&self) -> &[f64] {
        &self.voxels
    }

    pub fn len(&self) -> usize {
        self.voxels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voxels.is_empty()
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.voxels[linear_index(self.dims, x, y, z)]
    }

    /// Same geometry, new voxel values.
    pub fn with_voxels(&self, voxels: Vec<f64>) -> Result<Self> {
        Self::new(self.dims, self.spacing, voxels)
    }

    pub fn into_voxels(self) -> Vec<f64> {
        self.voxels
    }
}

/// Voxel mask with values restricted to {0, 1}.
///
/// Used for both the breast mask and the dense-tissue mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask3D {
    dims: Dims,
    voxels: Vec<u8>,
}

impl BinaryMask3D {
    pub fn new(dims: Dims, voxels: Vec<u8>) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidMask(format!("zero-sized dims {dims:?}")));
        }
        if voxels.len() != voxel_count(dims) {
            return Err(Error::ElementCount {
                expected: voxel_count(dims),
                found: voxels.len(),
            });
        }
        if let Some((index, &value)) = voxels.iter().enumerate().find(|(_, &v)| v > 1) {
            return Err(Error::NonBinary { value, index });
        }
        Ok(BinaryMask3D { dims, voxels })
    }

    pub fn zeros(dims: Dims) -> Self {
        BinaryMask3D {
            dims,
            voxels: vec![0; voxel_count(dims)],
        }
    }

    pub fn from_fn(dims: Dims, mut f: impl FnMut(usize, usize, usize) -> bool) -> Self {
        let mut voxels = Vec::with_capacity(voxel_count(dims));
        for z in 0..dims[2] {
            for y in 0..dims[1] {
                for x in 0..dims[0] {
                    voxels.push(f(x, y, z) as u8);
                }
            }
        }
        BinaryMask3D { dims, voxels }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn voxels(&self) -> &[u8] {
        &self.voxels
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.voxels[linear_index(self.dims, x, y, z)] == 1
    }

    pub fn set(&mut self, x: usize, y: usize, z: usize, on: bool) {
        let i = linear_index(self.dims, x, y, z);
        self.voxels[i] = on as u8;
    }

    pub fn count(&self) -> usize {
        self.voxels.iter().map(|&v| v as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.voxels.iter().all(|&v| v == 0)
    }

    pub fn check_dims(&self, other: &BinaryMask3D) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::DimsMismatch {
                left: self.dims,
                right: other.dims,
            });
        }
        Ok(())
    }

    pub fn and(&self, other: &BinaryMask3D) -> Result<BinaryMask3D> {
        self.check_dims(other)?;
        let voxels = self
            .voxels
            .iter()
            .zip(&other.voxels)
            .map(|(&a, &b)| a & b)
            .collect();
        Ok(BinaryMask3D {
            dims: self.dims,
            voxels,
        })
    }

    pub fn or(&self, other: &BinaryMask3D) -> Result<BinaryMask3D> {
        self.check_dims(other)?;
        let voxels = self
            .voxels
            .iter()
            .zip(&other.voxels)
            .map(|(&a, &b)| a | b)
            .collect();
        Ok(BinaryMask3D {
            dims: self.dims,
            voxels,
        })
    }

    pub fn and_not(&self, other: &BinaryMask3D) -> Result<BinaryMask3D> {
        self.check_dims(other)?;
        let voxels = self
            .voxels
            .iter()
            .zip(&other.voxels)
            .map(|(&a, &b)| a & (1 - b))
            .collect();
        Ok(BinaryMask3D {
            dims: self.dims,
            voxels,
        })
    }

    /// Sets every background voxel that is not 6-connected to the volume
    /// border, i.e. closes cavities fully enclosed by foreground.
    pub fn fill_holes(&self) -> BinaryMask3D {
        let [nx, ny, nz] = self.dims;
        let mut outside = vec![false; self.voxels.len()];
        let mut stack = Vec::new();
        let seed = |i: usize, outside: &mut [bool], stack: &mut Vec<usize>| {
            if self.voxels[i] == 0 && !outside[i] {
                outside[i] = true;
                stack.push(i);
            }
        };
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    if x == 0 || y == 0 || z == 0 || x == nx - 1 || y == ny - 1 || z == nz - 1 {
                        seed(linear_index(self.dims, x, y, z), &mut outside, &mut stack);
                    }
                }
            }
        }
        while let Some(i) = stack.pop() {
            let (x, y, z) = (i % nx, (i / nx) % ny, i / (nx * ny));
            if x > 0 {
                seed(i - 1, &mut outside, &mut stack);
            }
            if x + 1 < nx {
                seed(i + 1, &mut outside, &mut stack);
            }
            if y > 0 {
                seed(i - nx, &mut outside, &mut stack);
            }
            if y + 1 < ny {
                seed(i + nx, &mut outside, &mut stack);
            }
            if z > 0 {
                seed(i - nx * ny, &mut outside, &mut stack);
            }
            if z + 1 < nz {
                seed(i + nx * ny, &mut outside, &mut stack);
            }
        }
        BinaryMask3D {
            dims: self.dims,
            voxels: outside.iter().map(|&o| u8::from(!o)).collect(),
        }
    }

    /// Coordinates of every foreground voxel in raster order.
    pub fn foreground(&self) -> Vec<[usize; 3]> {
        let [nx, ny, _] = self.dims;
        self.voxels
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == 1)
            .map(|(i, _)| [i % nx, (i / nx) % ny, i / (nx * ny)])
            .collect()
    }
}
