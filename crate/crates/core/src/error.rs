use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the geometry, I/O, and evaluation layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate point: zero-length vector has no direction")]
    DegeneratePoint,

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("insufficient model: {found} points, at least 3 required")]
    InsufficientModel { found: usize },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: truncated file ({len} bytes is not a multiple of {record})")]
    TruncatedFile {
        path: PathBuf,
        len: usize,
        record: usize,
    },

    #[error("{path}: missing calibration key {key}")]
    MissingCalibration { path: PathBuf, key: String },

    #[error("invalid calibration: {0}")]
    InvalidCalibration(String),

    #[error("undefined recall: no ground truths at the evaluated difficulty")]
    UndefinedRecall,

    #[error("invalid comparison: {0}")]
    InvalidComparison(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
