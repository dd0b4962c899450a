use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the training and detection pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate class distribution: both classes need at least one sample")]
    DegenerateClasses,
    #[error("singular augmentation for candidate {0}")]
    SingularAugmentation(usize),
    #[error("no separating feature")]
    NoSeparatingFeature,
    #[error("zero between-class direction")]
    ZeroDirection,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("empty image")]
    EmptyImage,
    #[error("feature footprint out of bounds")]
    OutOfBounds,
    #[error("bootstrap exhausted: found {found} of {required} required negatives")]
    BootstrapExhausted { found: usize, required: usize },
    #[error("unknown model format version {0}")]
    UnknownVersion(u32),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn file(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::File {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
