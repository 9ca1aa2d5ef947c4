//! Breast MRI density quantification.
//!
//! The pipeline ingests a DICOM series or portable volume into the LPS frame,
//! segments the breast and the dense (fibroglandular) tissue with
//! patch-based sliding-window inference over a pluggable backend, and
//! reports the dense-to-breast voxel ratio. Supporting modules evaluate
//! segmentations (Dice, Hausdorff), parse density categories from
//! mammography reports, and compute cohort statistics.

pub mod analytics;
pub mod cli;
pub mod error;
pub mod io;
pub mod phantom;
pub mod quantify;
pub mod segmentation;
pub mod volume;

pub use error::{Error, Result};
pub use volume::{BinaryMask3D, Dims, Orientation, Volume3D};
