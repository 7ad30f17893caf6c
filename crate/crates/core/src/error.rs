use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by model construction, estimation, and file ingestion.
#[derive(Debug, Error)]
pub enum Error {
    /// The query position is (numerically) on top of a locator, so the
    /// direction and distance derivatives are undefined.
    #[error("position is degenerate: within {tolerance_m} m of locator {id}")]
    DegeneratePosition { id: String, tolerance_m: f64 },

    /// A measurement references a locator id that is not in the scene.
    #[error("unknown locator id {id:?}")]
    UnknownLocator { id: String },

    /// An estimator was invoked with no measurements at all.
    #[error("empty measurement set for {estimator}")]
    EmptyMeasurements { estimator: &'static str },

    /// Too few measurements for a well-posed estimate.
    #[error("{estimator} needs at least {needed} measurements, got {got}")]
    InsufficientMeasurements {
        estimator: &'static str,
        needed: usize,
        got: usize,
    },

    /// A parameter is outside its admissible range.
    #[error("invalid parameter: {reason}")]
    InvalidParameter { reason: String },

    /// A malformed record in a CSV input, with its 1-based line number.
    #[error("{path}: line {line}: {reason}")]
    Csv {
        path: PathBuf,
        line: u64,
        reason: String,
    },

    /// A malformed JSON input.
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    /// An underlying I/O failure, annotated with the path involved.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn csv(path: impl Into<PathBuf>, line: u64, reason: impl Into<String>) -> Self {
        Error::Csv {
            path: path.into(),
            line,
            reason: reason.into(),
        }
    }
}
