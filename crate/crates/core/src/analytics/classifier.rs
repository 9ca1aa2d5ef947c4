//! Ordinal threshold classifier mapping MR density onto the four report categories.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analytics::cohort::CohortRecord;
use crate::analytics::reports::DensityCategory;
use crate::error::{Error, Result};

/// Minimum training examples per category.
pub const MIN_PER_CATEGORY: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdClassifier {
    thresholds: [f64; 3],
}

impl ThresholdClassifier {
    pub fn new(thresholds: [f64; 3]) -> Result<Self> {
        let [t1, t2, t3] = thresholds;
        if !(t1 < t2 && t2 < t3) {
            return Err(Error::InvalidParameter(format!(
                "thresholds must be strictly ascending, got {thresholds:?}"
            )));
        }
        Ok(ThresholdClassifier { thresholds })
    }

    pub fn thresholds(&self) -> [f64; 3] {
        self.thresholds
    }

    /// A density equal to a cut point goes to the denser category.
    pub fn classify(&self, density: f64) -> Result<DensityCategory> {
        if !(0.0..=1.0).contains(&density) {
            return Err(Error::OutOfRange(density));
        }
        let above = self.thresholds.iter().filter(|&&t| density >= t).count();
        Ok(DensityCategory::ALL[above])
    }
}

pub fn classify_density(classifier: &ThresholdClassifier, density: f64) -> Result<DensityCategory> {
    classifier.classify(density)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifierFit {
    pub classifier: ThresholdClassifier,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub n_train: usize,
    pub n_test: usize,
}

/// Cut points maximizing training accuracy.
///
/// Candidates are midpoints between adjacent distinct sorted densities. The
/// search over all ascending triples is done exactly with a prefix-count
/// dynamic program; ties keep the lowest cut points.
pub fn fit_thresholds(train: &[(f64, DensityCategory)]) -> Result<(ThresholdClassifier, usize)> {
    for c in DensityCategory::ALL {
        let n = train.iter().filter(|(_, k)| *k == c).count();
        if n < MIN_PER_CATEGORY {
            return Err(Error::InsufficientCoverage(format!(
                "{n} training records for {c}, need {MIN_PER_CATEGORY}"
            )));
        }
    }
    let mut sorted = train.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = sorted.len();

    // prefix[c][k] = records of category c among the k lowest densities.
    let mut prefix = vec![vec![0i64; n + 1]; 4];
    for (k, (_, cat)) in sorted.iter().enumerate() {
        for (c, row) in prefix.iter_mut().enumerate() {
            row[k + 1] = row[k] + (cat.rank() as usize - 1 == c) as i64;
        }
    }
    let cuts: Vec<usize> = (1..n).filter(|&k| sorted[k - 1].0 < sorted[k].0).collect();
    if cuts.len() < 3 {
        return Err(Error::InsufficientCoverage(
            "fewer than 3 distinct cut points in training densities".into(),
        ));
    }

    // acc = sum_s gain(s, cut_s) + prefix[3][n] with gain(s, k) = prefix[s][k] - prefix[s+1][k].
    let gain = |s: usize, k: usize| prefix[s][k] - prefix[s + 1][k];
    let m = cuts.len();
    let mut score: Vec<i64> = cuts.iter().map(|&k| gain(0, k)).collect();
    let mut back = vec![[usize::MAX; 3]; m];
    for s in 1..3 {
        let mut next = vec![i64::MIN; m];
        let mut next_back = back.clone();
        let mut best_prev: Option<usize> = None;
        for j in 0..m {
            if let Some(b) = best_prev {
                next[j] = score[b] + gain(s, cuts[j]);
                next_back[j] = back[b];
                next_back[j][s - 1] = b;
            }
            if score[j] > i64::MIN && best_prev.is_none_or(|b| score[j] > score[b]) {
                best_prev = Some(j);
            }
        }
        score = next;
        back = next_back;
    }
    let last = (0..m)
        .filter(|&j| score[j] > i64::MIN)
        .fold(None::<usize>, |acc, j| match acc {
            Some(a) if score[a] >= score[j] => Some(a),
            _ => Some(j),
        })
        .expect("at least three cut points");
    let path = [cuts[back[last][0]], cuts[back[last][1]], cuts[last]];
    let score = score[last];
    let correct = (score + prefix[3][n]) as usize;
    let mid = |k: usize| (sorted[k - 1].0 + sorted[k].0) / 2.0;
    let classifier = ThresholdClassifier::new([mid(path[0]), mid(path[1]), mid(path[2])])?;
    Ok((classifier, correct))
}

/// Shuffles with `seed`, trains on the first `split_ratio` of the labelled
/// records, and reports accuracy on the rest.
pub fn fit_threshold_classifier(
    records: &[CohortRecord],
    split_ratio: f64,
    seed: u64,
) -> Result<ClassifierFit> {
    if !(split_ratio > 0.0 && split_ratio < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "split ratio must lie in (0, 1), got {split_ratio}"
        )));
    }
    let mut labelled: Vec<(f64, DensityCategory)> = records
        .iter()
        .filter_map(|r| r.mammo_category.map(|c| (r.density, c)))
        .collect();
    labelled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((labelled.len() as f64) * split_ratio).round() as usize;
    let (train, test) = labelled.split_at(n_train.min(labelled.len()));
    if test.is_empty() {
        return Err(Error::InsufficientCoverage("empty test split".into()));
    }
    let (classifier, correct) = fit_thresholds(train)?;
    let mut hits = 0;
    for &(d, c) in test {
        hits += (classifier.classify(d)? == c) as usize;
    }
    Ok(ClassifierFit {
        classifier,
        train_accuracy: correct as f64 / train.len() as f64,
        test_accuracy: hits as f64 / test.len() as f64,
        n_train: train.len(),
        n_test: test.len(),
    })
}
