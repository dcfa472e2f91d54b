use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: String, actual: String },

    #[error("unsupported image format: {0}")]
    Format(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("precondition violated at pixel (row {row}, col {col}): {detail}")]
    Precondition {
        row: usize,
        col: usize,
        detail: String,
    },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("sample too small: need at least {needed}, got {got}")]
    SampleSize { needed: usize, got: usize },

    #[error("degenerate region: {0}")]
    DegenerateRegion(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn dims(expected: impl ToString, actual: impl ToString) -> Self {
        Error::Dimension {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}
