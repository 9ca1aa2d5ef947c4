//! Report parsing and cohort-level statistics.

pub mod auc;
pub mod classifier;
pub mod cohort;
pub mod correlation;
pub mod reports;
pub mod stats;

pub use auc::auc_binary;
pub use classifier::{
    classify_density, fit_threshold_classifier, fit_thresholds, ClassifierFit, ThresholdClassifier,
};
pub use cohort::{read_cohort_csv, write_cohort_csv, CohortRecord, DatasetTag, COHORT_HEADER};
pub use correlation::{
    average_ranks, kendall_tau, spearman, CorrelationMethod, CorrelationResult,
};
pub use reports::{parse_density_category, read_corpus, DensityCategory, Report};
pub use stats::{
    age_group_stats, cohort_summary, histogram, quantile, AgeBinReport, AgeBinSummary,
    GroupSummary, Histogram, StdConvention, Summary,
};
