//! Rank correlations with tie handling and approximate p-values.

use std::fmt;

use serde::Serialize;
use statrs::function::beta::beta_reg;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationMethod {
    Spearman,
    Kendall,
}

impl fmt::Display for CorrelationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorrelationMethod::Spearman => "spearman",
            CorrelationMethod::Kendall => "kendall",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationResult {
    pub method: CorrelationMethod,
    pub coefficient: f64,
    /// Two-sided.
    pub p_value: f64,
    pub n: usize,
}

fn check_inputs(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            found: x.len(),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let constant = |v: &[f64]| v.iter().all(|&a| a == v[0]);
    if constant(x) || constant(y) {
        return Err(Error::ConstantInput);
    }
    Ok(())
}

/// 1-based ranks; tied values share the average of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i+1 ..= j
        let avg = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        i = j;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Spearman's rho: Pearson correlation of average ranks.
///
/// The p-value uses `t = rho sqrt((n-2)/(1-rho^2))` against Student's t with
/// n-2 degrees of freedom; it is 0 when |rho| = 1.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<CorrelationResult> {
    check_inputs(x, y)?;
    let rho = pearson(&average_ranks(x), &average_ranks(y));
    Ok(CorrelationResult {
        method: CorrelationMethod::Spearman,
        coefficient: rho,
        p_value: spearman_p_value(rho, x.len()),
        n: x.len(),
    })
}

pub fn spearman_p_value(rho: f64, n: usize) -> f64 {
    if rho.abs() >= 1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t2 = rho * rho * df / (1.0 - rho * rho);
    // Two-sided tail of Student's t: I_{df/(df+t^2)}(df/2, 1/2).
    beta_reg(df / 2.0, 0.5, df / (df + t2)).clamp(0.0, 1.0)
}

/// Kendall's tau-b in O(n log n) (Knight's merge-sort algorithm).
///
/// The p-value is the normal approximation
/// `z = 3 tau sqrt(n(n-1)) / sqrt(2(2n+5))`, which ignores tie corrections
/// to the variance.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<CorrelationResult> {
    check_inputs(x, y)?;
    let n = x.len();
    let tau = tau_b(x, y);
    Ok(CorrelationResult {
        method: CorrelationMethod::Kendall,
        coefficient: tau,
        p_value: kendall_p_value(tau, n),
        n,
    })
}

pub fn kendall_p_value(tau: f64, n: usize) -> f64 {
    let n = n as f64;
    let z = 3.0 * tau * (n * (n - 1.0)).sqrt() / (2.0 * (2.0 * n + 5.0)).sqrt();
    erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

fn tied_pairs(sorted: &[f64]) -> i64 {
    let mut total = 0i64;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as i64;
        total += t * (t - 1) / 2;
        i = j;
    }
    total
}

fn tau_b(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));

    let n0 = (n as i64) * (n as i64 - 1) / 2;
    let xs: Vec<f64> = order.iter().map(|&i| x[i]).collect();
    let n1 = tied_pairs(&xs);
    // Joint ties: runs equal in both x and y.
    let mut n3 = 0i64;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && x[order[j]] == x[order[i]] && y[order[j]] == y[order[i]] {
            j += 1;
        }
        let t = (j - i) as i64;
        n3 += t * (t - 1) / 2;
        i = j;
    }

    let mut ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let mut buf = ys.clone();
    let swaps = merge_count(&mut ys, &mut buf);
    let n2 = tied_pairs(&ys);

    let s = n0 - n1 - n2 + n3 - 2 * swaps;
    let denom = (((n0 - n1) as f64) * ((n0 - n2) as f64)).sqrt();
    (s as f64 / denom).clamp(-1.0, 1.0)
}

/// Sorts `v` ascending and returns the number of strict inversions.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> i64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = {
        let (l, r) = v.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        merge_count(l, bl) + merge_count(r, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            swaps += (mid - i) as i64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}
