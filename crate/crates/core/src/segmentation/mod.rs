//! Normalization, patch planning, sliding-window inference and binarization.

pub mod backend;
pub mod fcm;
pub mod fusion;
pub mod normalize;
pub mod patches;
pub mod pipeline;

pub use backend::{
    BackendSpec, ClusterTarget, FcmBackend, FcmBackendConfig, ImportBackend, OracleBackend, Patch,
    PatchBackend, ProbabilityMap,
};
pub use fcm::{fcm_fit, fcm_predict_patch, FcmModel, FcmParams};
pub use fusion::{binarize, run_sliding_window, ProbabilityVolume};
pub use normalize::{zscore_normalize, zscore_normalize_with_stats, NormStats};
pub use patches::{plan_patches, PatchPlan, DEFAULT_PATCH_SIZE, DEFAULT_STEPS};
pub use pipeline::{segment_subject, split_laterality, SegmentParams, SubjectMasks};
