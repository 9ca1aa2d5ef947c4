//! Volume ingestion and persistence.

pub mod dicom;
pub mod portable;

pub use dicom::{load_dicom_series, SeriesMeta};
pub use portable::{
    load_mask, load_mask_with_spacing, load_portable_volume, save_mask, save_portable_volume,
    Dtype, PortableHeader,
};
