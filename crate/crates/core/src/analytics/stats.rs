//! Descriptive statistics: group summaries, histograms and age-bin tables.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::analytics::cohort::{CohortRecord, DatasetTag};
use crate::error::{Error, Result};

/// Denominator convention for the standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum StdConvention {
    /// Divide by n.
    #[default]
    Population,
    /// Divide by n - 1 (0 for a single value).
    Sample,
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn std_dev(values: &[f64], convention: StdConvention) -> f64 {
    let n = values.len();
    let m = mean(values);
    let ss = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
    let denom = match convention {
        StdConvention::Population => n as f64,
        StdConvention::Sample if n > 1 => (n - 1) as f64,
        StdConvention::Sample => return 0.0,
    };
    (ss / denom).sqrt()
}

/// Linear interpolation between order statistics (`h = q (n - 1)`).
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, q)
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

impl Summary {
    /// `None` for an empty slice.
    pub fn of(values: &[f64], convention: StdConvention) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Some(Summary {
            n: values.len(),
            mean: mean(values),
            std: std_dev(values, convention),
            q1: quantile_sorted(&sorted, 0.25),
            median: quantile_sorted(&sorted, 0.5),
            q3: quantile_sorted(&sorted, 0.75),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub dataset: DatasetTag,
    pub n: usize,
    pub mean: f64,
    pub std: f64,
}

/// Per-dataset density mean and std, in dataset-tag order.
pub fn cohort_summary(records: &[CohortRecord], convention: StdConvention) -> Result<Vec<GroupSummary>> {
    if records.is_empty() {
        return Err(Error::EmptyCohort);
    }
    let mut groups: BTreeMap<DatasetTag, Vec<f64>> = BTreeMap::new();
    for r in records {
        groups.entry(r.dataset).or_default().push(r.density);
    }
    Ok(groups
        .into_iter()
        .map(|(dataset, d)| GroupSummary {
            dataset,
            n: d.len(),
            mean: mean(&d),
            std: std_dev(&d, convention),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    /// `counts.len() + 1` edges from 0 to 1.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Uniform bins over [0, 1]; bins are right-open except the last.
pub fn histogram(densities: &[f64], bin_width: f64) -> Result<Histogram> {
    if !(bin_width > 0.0 && bin_width <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "bin width must lie in (0, 1], got {bin_width}"
        )));
    }
    // Tolerance absorbs representation error, e.g. 1 / 0.02 = 50.000000000000004.
    let bins = ((1.0 / bin_width) - 1e-9).ceil().max(1.0) as usize;
    let edges = (0..=bins)
        .map(|i| (i as f64 * bin_width).min(1.0))
        .collect();
    let mut counts = vec![0usize; bins];
    for &d in densities {
        if !(0.0..=1.0).contains(&d) {
            return Err(Error::OutOfRange(d));
        }
        let i = ((d / bin_width) + 1e-9).floor() as usize;
        counts[i.min(bins - 1)] += 1;
    }
    Ok(Histogram { edges, counts })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgeBinSummary {
    /// First year of the decade, e.g. 20 for 20-29.
    pub decade: u32,
    pub summary: Summary,
}

impl AgeBinSummary {
    pub fn label(&self) -> String {
        format!("{}-{}", self.decade, self.decade + 9)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgeBinReport {
    pub bins: Vec<AgeBinSummary>,
    /// Records outside 20..90 years.
    pub excluded: usize,
}

pub const AGE_MIN: f64 = 20.0;
pub const AGE_MAX: f64 = 90.0;

/// Density statistics per age decade from 20-29 to 80-89; empty decades are omitted.
pub fn age_group_stats(records: &[CohortRecord], convention: StdConvention) -> AgeBinReport {
    let mut groups: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    let mut excluded = 0;
    for r in records {
        if !(AGE_MIN..AGE_MAX).contains(&r.age) {
            excluded += 1;
            continue;
        }
        let decade = (r.age / 10.0).floor() as u32 * 10;
        groups.entry(decade).or_default().push(r.density);
    }
    if excluded > 0 {
        log::warn!("{excluded} records outside ages {AGE_MIN}-{AGE_MAX} excluded from age bins");
    }
    let bins = groups
        .into_iter()
        .filter_map(|(decade, d)| {
            Summary::of(&d, convention).map(|summary| AgeBinSummary { decade, summary })
        })
        .collect();
    AgeBinReport { bins, excluded }
}
