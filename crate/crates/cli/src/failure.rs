use std::fmt;

use ppc_core::Error;

/// A failed run, carrying the process exit code.
///
/// | code | meaning |
/// |------|---------|
/// | 1    | I/O or other runtime failure |
/// | 2    | frame ids differ between input directories |
/// | 3    | an input file could not be parsed |
/// | 4    | no ground truth at the evaluated difficulty |
/// | 64   | invalid command line |
#[derive(Debug)]
pub enum Failure {
    Runtime(anyhow::Error),
    FrameMismatch(String),
    Parse(String),
    NoGroundTruth(String),
    Usage(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Runtime(_) => 1,
            Failure::FrameMismatch(_) => 2,
            Failure::Parse(_) => 3,
            Failure::NoGroundTruth(_) => 4,
            Failure::Usage(_) => 64,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        Failure::Usage(msg.into())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Runtime(e) => write!(f, "{e:#}"),
            Failure::FrameMismatch(m) => write!(f, "frame ids differ: {m}"),
            Failure::Parse(m) => write!(f, "{m}"),
            Failure::NoGroundTruth(m) => write!(f, "{m}"),
            Failure::Usage(m) => write!(f, "{m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. }
            | Error::TruncatedFile { .. }
            | Error::MissingCalibration { .. }
            | Error::InvalidCalibration(_)
            | Error::InsufficientModel { .. }
            | Error::DegenerateModel(_) => Failure::Parse(e.to_string()),
            Error::UndefinedRecall => Failure::NoGroundTruth(e.to_string()),
            Error::InvalidArgument(m) => Failure::Usage(m),
            other => Failure::Runtime(other.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

pub type Outcome<T = ()> = Result<T, Failure>;
