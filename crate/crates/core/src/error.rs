use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: shape mismatch between {left:?} and {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("{op}: invalid shape {shape:?}: {reason}")]
    InvalidShape {
        op: &'static str,
        shape: Vec<usize>,
        reason: String,
    },

    #[error("{op}: axis {axis} has zero extent in shape {shape:?}")]
    EmptyAxis {
        op: &'static str,
        axis: usize,
        shape: Vec<usize>,
    },

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("{op}: row {row} of the distribution sums to {sum}, not 1")]
    NotNormalized { op: &'static str, row: usize, sum: f64 },

    #[error("backward requires a scalar loss, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },

    #[error("dropout rate {0} is outside [0, 1)")]
    InvalidRate(f64),

    #[error("trainable tensor `{0}` has no gradient")]
    MissingGradient(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: row {row}: {msg}")]
    MalformedRow { path: PathBuf, row: usize, msg: String },

    #[error("{path}: embedding dimension mismatch: expected {expected}, file has {found}")]
    EmbeddingDim {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("expected {expected} classes, found {found}")]
    ClassCount { expected: usize, found: usize },

    #[error("class {class}: needed {needed} examples for the {split} split, only {available} available")]
    InsufficientClass {
        class: usize,
        split: &'static str,
        needed: usize,
        available: usize,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("encoder `{found}` does not support {op}; expected {expected}")]
    WrongEncoder {
        op: &'static str,
        expected: &'static str,
        found: String,
    },

    #[error("regime `{found}` cannot build {op}")]
    WrongRegime { op: &'static str, found: String },

    #[error("invalid config at `{field}`: {msg}")]
    Config { field: String, msg: String },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for I/O errors caused by a missing file.
    pub fn is_not_found(&self) -> bool {
        matches!(self, Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound)
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            msg: msg.into(),
        }
    }
}
