use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate feature vector")]
    DegenerateVector,

    #[error("degenerate distance distribution")]
    DegenerateDistances,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid feature set: {0}")]
    InvalidFeatures(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("no training pairs")]
    NoTrainingPairs,

    #[error("empty query set")]
    EmptyQuerySet,

    #[error("empty distilled set: {0}")]
    EmptyDistilledSet(String),

    #[error("{path}: format error at byte offset {offset}: {message}")]
    Format {
        path: PathBuf,
        offset: u64,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{path}: {source}")]
    JsonFile {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 2 invalid config, 3 empty distilled set,
    /// 4 I/O or format error, 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_) => 2,
            Error::EmptyDistilledSet(_) => 3,
            Error::Format { .. } | Error::Io { .. } | Error::Json(_) | Error::JsonFile { .. } => 4,
            _ => 1,
        }
    }
}
