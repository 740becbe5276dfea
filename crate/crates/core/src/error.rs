use std::path::PathBuf;

/// Errors returned by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("signal is not normalized to [0, 1] (found value {0})")]
    NotNormalized(f64),

    #[error("non-finite value at line {line}")]
    NonFinite { line: usize },

    #[error("empty representation")]
    EmptyRepresentation,

    #[error("level {0} is empty; skipped")]
    LevelSkipped(usize),

    #[error("no training patterns")]
    NoTrainingPatterns,

    #[error("patterns share no common level")]
    DisjointLevels,

    #[error("matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),

    #[error("negative radicand {value} at ({i}, {j})")]
    NegativeRadicand { i: usize, j: usize, value: f64 },

    #[error("parse error in {path}: {msg}")]
    Parse { path: PathBuf, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors caused by bad input rather than by the environment.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
