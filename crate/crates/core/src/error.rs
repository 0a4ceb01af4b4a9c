use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the certification library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid noise parameters: {0}")]
    InvalidParams(String),

    #[error("input outside the grid domain: {0}")]
    InputDomain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("regions are not sorted by decreasing likelihood ratio (at index {0})")]
    Unsorted(usize),

    #[error("region masses do not sum to one ({0})")]
    MassNotNormalized(&'static str),

    #[error("certificate function is not invertible: {0}")]
    NotInvertible(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("header mismatch: {0}")]
    HeaderMismatch(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("unsupported size: {0}")]
    UnsupportedSize(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
