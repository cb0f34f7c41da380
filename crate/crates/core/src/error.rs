use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("no deletable node: genome has only protected nodes")]
    NoDeletableNode,

    #[error("landscape too large for exhaustive enumeration: N={0} exceeds {max}", max = crate::landscape::MAX_EXHAUSTIVE_TRAITS)]
    TooLarge(usize),

    #[error("input schedule infeasible: {cycles} cycles cannot be split evenly over {patterns} input patterns")]
    ScheduleInfeasible { cycles: usize, patterns: usize },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("invalid manifest: {0}")]
    InvalidManifest(String),

    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}
