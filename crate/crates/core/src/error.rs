use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while loading data, updating beliefs or running episodes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("grid does not cover mixture")]
    GridDoesNotCoverMixture,

    #[error("measurement incompatible with belief")]
    IncompatibleMeasurement,

    #[error("label mismatch: expected {expected:?}, got {got:?}")]
    LabelMismatch {
        expected: Vec<String>,
        got: Vec<String>,
    },

    #[error("unknown label {label:?} for {node}")]
    UnknownLabel { node: String, label: String },

    #[error("mixed-unit entropy not supported")]
    MixedEntropy,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("serialization failed: {0}")]
    Serialize(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
