use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by data loading, solving and classification.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{what}: bad IDX magic number 0x{found:08x}, expected 0x{expected:08x}")]
    BadMagic {
        what: &'static str,
        found: u32,
        expected: u32,
    },

    #[error("image file holds {images} items but label file holds {labels}")]
    CountMismatch { images: usize, labels: usize },

    #[error("{what}: file truncated, need {needed} bytes but found {found}")]
    TruncatedFile {
        what: &'static str,
        needed: usize,
        found: usize,
    },

    #[error("CSV row {row} has {found} fields, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("CSV row {row}, column `{column}`: `{value}` is not a finite number")]
    NonNumericFeature {
        row: usize,
        column: String,
        value: String,
    },

    #[error("label column `{0}` not found in CSV header")]
    MissingLabelColumn(String),

    #[error("dataset has a single class; at least two are required")]
    SingleClass,

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("class `{class}` has {available} samples, {requested} requested")]
    InsufficientSamples {
        class: String,
        available: usize,
        requested: usize,
    },

    #[error("column {0} has zero norm")]
    ZeroColumn(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("system matrix is singular or not finite")]
    SingularSystem,

    #[error("every class score is infinite (all coefficient blocks vanished)")]
    AllScoresInfinite,

    #[error("atom count {k} must lie in 1..={available}")]
    InvalidAtomCount { k: usize, available: usize },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("CSV error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
