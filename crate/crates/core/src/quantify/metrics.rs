//! Overlap and boundary-distance metrics between binary masks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{BinaryMask3D, Dims};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegMetrics {
    pub dsc: f64,
    pub hd: f64,
}

/// `2|A ∩ B| / (|A| + |B|)`. Two empty masks are an error.
pub fn dice(a: &BinaryMask3D, b: &BinaryMask3D) -> Result<f64> {
    a.check_dims(b)?;
    let (mut na, mut nb, mut both) = (0u64, 0u64, 0u64);
    for (&x, &y) in a.voxels().iter().zip(b.voxels()) {
        na += x as u64;
        nb += y as u64;
        both += (x & y) as u64;
    }
    if na + nb == 0 {
        return Err(Error::BothEmpty);
    }
    Ok(2.0 * both as f64 / (na + nb) as f64)
}

/// Symmetric Hausdorff distance between foreground voxel sets, in voxel units.
pub fn hausdorff(a: &BinaryMask3D, b: &BinaryMask3D) -> Result<f64> {
    hausdorff_with_spacing(a, b, None)
}

/// As [`hausdorff`], optionally measuring distances in mm with per-axis `spacing`.
pub fn hausdorff_with_spacing(
    a: &BinaryMask3D,
    b: &BinaryMask3D,
    spacing: Option<[f64; 3]>,
) -> Result<f64> {
    a.check_dims(b)?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyMask);
    }
    let w = spacing.unwrap_or([1.0; 3]);
    Ok(directed_sq(a, b, w).max(directed_sq(b, a, w)).sqrt())
}

pub fn evaluate(pred: &BinaryMask3D, truth: &BinaryMask3D, spacing: Option<[f64; 3]>) -> Result<SegMetrics> {
    let dsc = dice(pred, truth)?;
    let hd = hausdorff_with_spacing(pred, truth, spacing)?;
    Ok(SegMetrics { dsc, hd })
}

/// Largest squared distance from a voxel of `from` to the nearest voxel of `to`.
fn directed_sq(from: &BinaryMask3D, to: &BinaryMask3D, w: [f64; 3]) -> f64 {
    let dt = squared_distance_transform(to, w);
    from.voxels()
        .iter()
        .zip(&dt)
        .filter(|(&v, _)| v == 1)
        .map(|(_, &d)| d)
        .fold(0.0, f64::max)
}

/// Exact squared Euclidean distance to the nearest foreground voxel, computed
/// with separable 1D lower envelopes of parabolas (Felzenszwalb & Huttenlocher).
///
/// With unit weights every output is an integer sum of squares, exact in f64.
pub fn squared_distance_transform(mask: &BinaryMask3D, w: [f64; 3]) -> Vec<f64> {
    let dims = mask.dims();
    let mut f: Vec<f64> = mask
        .voxels()
        .iter()
        .map(|&v| if v == 1 { 0.0 } else { f64::INFINITY })
        .collect();
    let longest = dims.iter().copied().max().unwrap_or(0);
    let mut line = vec![0.0; longest];
    let mut out = vec![0.0; longest];
    let mut scratch = Envelope::with_capacity(longest);
    for axis in 0..3 {
        let n = dims[axis];
        let stride = axis_stride(dims, axis);
        let w2 = w[axis] * w[axis];
        for start in line_starts(dims, axis) {
            for i in 0..n {
                line[i] = f[start + i * stride];
            }
            scratch.transform(&line[..n], &mut out[..n], w2);
            for i in 0..n {
                f[start + i * stride] = out[i];
            }
        }
    }
    f
}

fn axis_stride(dims: Dims, axis: usize) -> usize {
    match axis {
        0 => 1,
        1 => dims[0],
        _ => dims[0] * dims[1],
    }
}

fn line_starts(dims: Dims, axis: usize) -> Vec<usize> {
    let [nx, ny, nz] = dims;
    let mut starts = Vec::new();
    match axis {
        0 => {
            for z in 0..nz {
                for y in 0..ny {
                    starts.push(nx * (y + ny * z));
                }
            }
        }
        1 => {
            for z in 0..nz {
                for x in 0..nx {
                    starts.push(x + nx * ny * z);
                }
            }
        }
        _ => {
            for y in 0..ny {
                for x in 0..nx {
                    starts.push(x + nx * y);
                }
            }
        }
    }
    starts
}

struct Envelope {
    sites: Vec<usize>,
    bounds: Vec<f64>,
}

impl Envelope {
    fn with_capacity(n: usize) -> Self {
        Envelope {
            sites: Vec::with_capacity(n),
            bounds: Vec::with_capacity(n + 1),
        }
    }

    /// `out[p] = min_q f[q] + w2 (p - q)^2` over finite `f[q]`.
    fn transform(&mut self, f: &[f64], out: &mut [f64], w2: f64) {
        self.sites.clear();
        self.bounds.clear();
        let intersect = |q: usize, v: usize| -> f64 {
            let (qf, vf) = (q as f64, v as f64);
            ((f[q] + w2 * qf * qf) - (f[v] + w2 * vf * vf)) / (2.0 * w2 * (qf - vf))
        };
        for q in 0..f.len() {
            if !f[q].is_finite() {
                continue;
            }
            while let Some(&v) = self.sites.last() {
                let s = intersect(q, v);
                if s <= *self.bounds.last().unwrap() {
                    self.sites.pop();
                    self.bounds.pop();
                } else {
                    break;
                }
            }
            let lower = match self.sites.last() {
                Some(&v) => intersect(q, v),
                None => f64::NEG_INFINITY,
            };
            self.sites.push(q);
            self.bounds.push(lower);
        }
        if self.sites.is_empty() {
            out.iter_mut().for_each(|o| *o = f64::INFINITY);
            return;
        }
        let mut k = 0;
        for (p, o) in out.iter_mut().enumerate() {
            let pf = p as f64;
            while k + 1 < self.sites.len() && self.bounds[k + 1] < pf {
                k += 1;
            }
            let q = self.sites[k];
            let d = pf - q as f64;
            *o = f[q] + w2 * d * d;
        }
    }
}
