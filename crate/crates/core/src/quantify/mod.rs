//! Density ratios, slice profiles and segmentation metrics.

pub mod density;
pub mod metrics;

pub use density::{
    compute_density, slice_density_profile, Axis, DensityRecord, Side, SliceDensity, SliceProfile,
};
pub use metrics::{dice, evaluate, hausdorff, hausdorff_with_spacing, SegMetrics};
