use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid volume: {0}")]
    InvalidVolume(String),

    #[error("invalid mask: {0}")]
    InvalidMask(String),

    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimsMismatch { left: [usize; 3], right: [usize; 3] },

    #[error("{path}: missing required DICOM tag {tag}")]
    MissingTag { path: PathBuf, tag: &'static str },

    #[error("{path}: malformed DICOM value for {tag}: {reason}")]
    BadTag {
        path: PathBuf,
        tag: &'static str,
        reason: String,
    },

    #[error("{path}: unsupported transfer syntax {uid}")]
    UnsupportedTransferSyntax { path: PathBuf, uid: String },

    #[error("{path}: failed to parse DICOM file: {reason}")]
    DicomParse { path: PathBuf, reason: String },

    #[error("inconsistent series geometry: {0}")]
    InconsistentSeries(String),

    #[error("duplicate slice position {position} mm ({first} and {second})")]
    DuplicateSlice {
        position: f64,
        first: PathBuf,
        second: PathBuf,
    },

    #[error("series needs at least 2 slices, found {0}")]
    TooFewSlices(usize),

    #[error("malformed header {path}: {reason}")]
    MalformedHeader { path: PathBuf, reason: String },

    #[error("unsupported dtype {0:?}")]
    UnsupportedDtype(String),

    #[error("element count mismatch: header declares {expected}, payload holds {found}")]
    ElementCount { expected: usize, found: usize },

    #[error("non-binary mask value {value} at voxel {index}")]
    NonBinary { value: u8, index: usize },

    #[error("invalid phantom spec: {0}")]
    InvalidPhantom(String),

    #[error("zero-variance volume (std {0:e})")]
    ZeroVariance(f64),

    #[error("backend failure: {0}")]
    Backend(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("fewer than {needed} distinct intensity values (found {found})")]
    TooFewDistinct { needed: usize, found: usize },

    #[error("non-finite value in input")]
    NonFinite,

    #[error("empty breast mask")]
    EmptyBreast,

    #[error("{0} dense voxels lie outside the breast mask")]
    DenseOutsideBreast(usize),

    #[error("both masks are empty")]
    BothEmpty,

    #[error("mask is empty")]
    EmptyMask,

    #[error("no density category keyword found")]
    UnknownCategory,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("need at least {needed} samples, found {found}")]
    TooFewSamples { needed: usize, found: usize },

    #[error("constant input vector")]
    ConstantInput,

    #[error("labels contain a single class")]
    SingleClass,

    #[error("value {0} outside [0, 1]")]
    OutOfRange(f64),

    #[error("insufficient class coverage: {0}")]
    InsufficientCoverage(String),

    #[error("empty cohort")]
    EmptyCohort,

    #[error("{path}:{line}: {reason}")]
    Csv {
        path: PathBuf,
        line: u64,
        reason: String,
    },

    #[error("invalid config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
