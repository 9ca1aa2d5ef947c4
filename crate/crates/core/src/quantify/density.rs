//! Volumetric density ratio and per-slice density profiles.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::BinaryMask3D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    #[default]
    Whole,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
            Side::Whole => Side::Whole,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::Whole => "whole",
        })
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "left" | "l" => Ok(Side::Left),
            "right" | "r" => Ok(Side::Right),
            "whole" | "both" => Ok(Side::Whole),
            other => Err(Error::InvalidParameter(format!("unknown side {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityRecord {
    pub subject_id: String,
    pub side: Side,
    pub density: f64,
    pub dense_voxels: u64,
    pub breast_voxels: u64,
}

impl DensityRecord {
    pub fn labeled(mut self, subject_id: impl Into<String>, side: Side) -> Self {
        self.subject_id = subject_id.into();
        self.side = side;
        self
    }
}

/// Dense voxel count over breast voxel count.
///
/// Every dense voxel must lie inside the breast mask.
pub fn compute_density(dense: &BinaryMask3D, breast: &BinaryMask3D) -> Result<DensityRecord> {
    dense.check_dims(breast)?;
    let mut n_dense = 0u64;
    let mut n_breast = 0u64;
    let mut outside = 0usize;
    for (&d, &b) in dense.voxels().iter().zip(breast.voxels()) {
        n_breast += b as u64;
        n_dense += (d & b) as u64;
        outside += (d & !b & 1) as usize;
    }
    if n_breast == 0 {
        return Err(Error::EmptyBreast);
    }
    if outside > 0 {
        return Err(Error::DenseOutsideBreast(outside));
    }
    Ok(DensityRecord {
        subject_id: String::new(),
        side: Side::Whole,
        density: n_dense as f64 / n_breast as f64,
        dense_voxels: n_dense,
        breast_voxels: n_breast,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    #[default]
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        self as usize
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(Error::InvalidParameter(format!("unknown axis {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceDensity {
    pub index: usize,
    pub dense_voxels: u64,
    pub breast_voxels: u64,
    /// `None` when the slice holds no breast voxels.
    pub density: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceProfile {
    pub axis: Axis,
    pub per_slice: Vec<SliceDensity>,
    pub volumetric_density: f64,
}

impl SliceProfile {
    /// Count-weighted aggregate of the slices; equals the volumetric density.
    pub fn aggregate(&self) -> f64 {
        let dense: u64 = self.per_slice.iter().map(|s| s.dense_voxels).sum();
        let breast: u64 = self.per_slice.iter().map(|s| s.breast_voxels).sum();
        dense as f64 / breast as f64
    }
}

pub fn slice_density_profile(
    dense: &BinaryMask3D,
    breast: &BinaryMask3D,
    axis: Axis,
) -> Result<SliceProfile> {
    let volumetric = compute_density(dense, breast)?;
    let dims = breast.dims();
    let k = axis.index();
    let mut dense_counts = vec![0u64; dims[k]];
    let mut breast_counts = vec![0u64; dims[k]];
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                let s = [x, y, z][k];
                if breast.get(x, y, z) {
                    breast_counts[s] += 1;
                    dense_counts[s] += dense.get(x, y, z) as u64;
                }
            }
        }
    }
    let per_slice = dense_counts
        .into_iter()
        .zip(breast_counts)
        .enumerate()
        .map(|(index, (d, b))| SliceDensity {
            index,
            dense_voxels: d,
            breast_voxels: b,
            density: (b > 0).then(|| d as f64 / b as f64),
        })
        .collect();
    Ok(SliceProfile {
        axis,
        per_slice,
        volumetric_density: volumetric.density,
    })
}
