use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BonusError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("index {index} is already unmasked")]
    AlreadyUnmasked { index: usize },

    #[error("index {index} out of range for pool of size {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("index {index} lies outside the region but is still masked")]
    MaskedOutsideRegion { index: usize },

    #[error("not enough observations: need at least {needed}, got {got}")]
    TooFewObservations { needed: usize, got: usize },

    #[error("learner `{learner}` failed: {reason}")]
    Learner { learner: String, reason: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("{path}: row {row}: {message}")]
    Csv { path: PathBuf, row: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl BonusError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        BonusError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BonusError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, BonusError>;
