//! One-dimensional fuzzy c-means on voxel intensities.
//!
//! Minimizes `sum_i sum_j u_ij^m (x_i - c_j)^2` by alternating the membership
//! update `u_ij = 1 / sum_k (|x_i - c_j| / |x_i - c_k|)^(2/(m-1))` and the
//! weighted-mean centroid update.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::Volume3D;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FcmParams {
    pub clusters: usize,
    pub fuzziness: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FcmParams {
    fn default() -> Self {
        FcmParams {
            clusters: 3,
            fuzziness: 2.0,
            tol: 1e-5,
            max_iter: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcmModel {
    centroids: Vec<f64>,
    fuzziness: f64,
    tol: f64,
    max_iter: usize,
    iterations: usize,
    objective_history: Vec<f64>,
}

impl FcmModel {
    /// A model with fixed centroids, e.g. loaded from a previous fit.
    pub fn from_centroids(centroids: Vec<f64>, fuzziness: f64) -> Result<Self> {
        if centroids.is_empty() {
            return Err(Error::InvalidParameter("no centroids".into()));
        }
        if !(fuzziness > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "fuzziness must be > 1, got {fuzziness}"
            )));
        }
        if centroids.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        if centroids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "centroids must be strictly increasing".into(),
            ));
        }
        Ok(FcmModel {
            centroids,
            fuzziness,
            tol: 0.0,
            max_iter: 0,
            iterations: 0,
            objective_history: Vec::new(),
        })
    }

    pub fn centroids(&self) -> &[f64] {
        &self.centroids
    }

    pub fn clusters(&self) -> usize {
        self.centroids.len()
    }

    pub fn fuzziness(&self) -> f64 {
        self.fuzziness
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn max_iter(&self) -> usize {
        self.max_iter
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Objective value after each membership update.
    pub fn objective_history(&self) -> &[f64] {
        &self.objective_history
    }

    /// Writes the membership of `x` in every cluster into `out`.
    pub fn memberships_into(&self, x: f64, out: &mut [f64]) {
        memberships(&self.centroids, self.fuzziness, x, out);
    }

    pub fn memberships(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.clusters()];
        self.memberships_into(x, &mut out);
        out
    }

    /// Index of the centroid nearest to `x`.
    pub fn nearest_cluster(&self, x: f64) -> usize {
        let mut best = 0;
        for (j, c) in self.centroids.iter().enumerate() {
            if (x - c).abs() < (x - self.centroids[best]).abs() {
                best = j;
            }
        }
        best
    }
}

fn memberships(centroids: &[f64], m: f64, x: f64, out: &mut [f64]) {
    let exponent = 1.0 / (m - 1.0);
    let mut d_min = f64::INFINITY;
    let mut hit = None;
    for (j, &c) in centroids.iter().enumerate() {
        let d = (x - c) * (x - c);
        if d == 0.0 {
            hit = Some(j);
        }
        d_min = d_min.min(d);
    }
    if let Some(j) = hit {
        out.iter_mut().for_each(|u| *u = 0.0);
        out[j] = 1.0;
        return;
    }
    // w_k = (d_min / d_k)^(1/(m-1)) stays in (0, 1].
    let mut total = 0.0;
    for (u, &c) in out.iter_mut().zip(centroids) {
        let d = (x - c) * (x - c);
        *u = (d_min / d).powf(exponent);
        total += *u;
    }
    out.iter_mut().for_each(|u| *u /= total);
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Centroids at the `(2i+1)/(2c)` quantiles of the sample. Falls back to the
/// same quantiles over distinct values when the sample quantiles collide.
fn quantile_centroids(sorted: &[f64], distinct: &[f64], c: usize) -> Vec<f64> {
    let at = |data: &[f64]| -> Vec<f64> {
        (0..c)
            .map(|i| quantile_sorted(data, (2 * i + 1) as f64 / (2 * c) as f64))
            .collect()
    };
    let init = at(sorted);
    if init.windows(2).all(|w| w[0] < w[1]) {
        init
    } else {
        at(distinct)
    }
}

/// Centroids evenly spaced over the 1st to 99th percentile range. Guards
/// against a dominant class pulling several quantiles into one mode.
fn range_centroids(sorted: &[f64], c: usize) -> Option<Vec<f64>> {
    let lo = quantile_sorted(sorted, 0.01);
    let hi = quantile_sorted(sorted, 0.99);
    (hi > lo).then(|| {
        (0..c)
            .map(|i| lo + (hi - lo) * (2 * i + 1) as f64 / (2 * c) as f64)
            .collect()
    })
}

struct Run {
    centroids: Vec<f64>,
    iterations: usize,
    history: Vec<f64>,
}

fn iterate(samples: &[f64], mut centroids: Vec<f64>, params: &FcmParams) -> Run {
    let c = centroids.len();
    let m = params.fuzziness;
    let mut u = vec![0.0; c];
    let mut num = vec![0.0; c];
    let mut den = vec![0.0; c];
    let mut history = Vec::new();
    let mut iterations = 0;
    while iterations < params.max_iter {
        iterations += 1;
        num.iter_mut().for_each(|v| *v = 0.0);
        den.iter_mut().for_each(|v| *v = 0.0);
        let mut objective = 0.0;
        for &x in samples {
            memberships(&centroids, m, x, &mut u);
            for j in 0..c {
                let w = u[j].powf(m);
                num[j] += w * x;
                den[j] += w;
                objective += w * (x - centroids[j]) * (x - centroids[j]);
            }
        }
        history.push(objective);
        let mut movement: f64 = 0.0;
        for j in 0..c {
            if den[j] > 0.0 {
                let next = num[j] / den[j];
                movement = movement.max((next - centroids[j]).abs());
                centroids[j] = next;
            }
        }
        if movement < params.tol {
            break;
        }
    }
    Run {
        centroids,
        iterations,
        history,
    }
}

pub fn fcm_fit(samples: &[f64], params: &FcmParams) -> Result<FcmModel> {
    let c = params.clusters;
    let m = params.fuzziness;
    if c == 0 {
        return Err(Error::InvalidParameter("cluster count must be >= 1".into()));
    }
    if !(m > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "fuzziness must be > 1, got {m}"
        )));
    }
    if !(params.tol >= 0.0) {
        return Err(Error::InvalidParameter("tol must be >= 0".into()));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    if distinct.len() < c {
        return Err(Error::TooFewDistinct {
            needed: c,
            found: distinct.len(),
        });
    }

    // Two deterministic starts; the run with the lower final objective wins.
    let mut starts = vec![quantile_centroids(&sorted, &distinct, c)];
    starts.extend(range_centroids(&sorted, c));
    let Run {
        mut centroids,
        iterations,
        history,
    } = starts
        .into_iter()
        .map(|init| iterate(samples, init, params))
        .min_by(|a, b| {
            let last = |r: &Run| r.history.last().copied().unwrap_or(f64::INFINITY);
            last(a).total_cmp(&last(b))
        })
        .expect("at least one start");

    centroids.sort_by(f64::total_cmp);
    if centroids.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Backend(format!(
            "fuzzy c-means centroids collapsed: {centroids:?}"
        )));
    }
    Ok(FcmModel {
        centroids,
        fuzziness: m,
        tol: params.tol,
        max_iter: params.max_iter,
        iterations,
        objective_history: history,
    })
}

/// Membership of `target` for every voxel of `patch`.
pub fn fcm_predict_patch(model: &FcmModel, patch: &Volume3D, target: usize) -> Result<Vec<f64>> {
    fcm_predict_values(model, patch.voxels(), &[target])
}

/// Summed membership of the `targets` clusters for each value.
pub fn fcm_predict_values(model: &FcmModel, values: &[f64], targets: &[usize]) -> Result<Vec<f64>> {
    if let Some(&t) = targets.iter().find(|&&t| t >= model.clusters()) {
        return Err(Error::InvalidParameter(format!(
            "target cluster {t} out of range for {} clusters",
            model.clusters()
        )));
    }
    let mut u = vec![0.0; model.clusters()];
    Ok(values
        .iter()
        .map(|&x| {
            model.memberships_into(x, &mut u);
            targets.iter().map(|&t| u[t]).sum::<f64>().clamp(0.0, 1.0)
        })
        .collect())
}
