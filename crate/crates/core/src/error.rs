use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid snapshot: {0}")]
    InvalidSnapshot(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid event: {0}")]
    InvalidEvent(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no samples shared between the two snapshots")]
    NoCommonSamples,

    #[error("not enough data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("missing ground-truth labels at t={0}")]
    MissingLabels(usize),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("unknown dataset `{0}`")]
    UnknownDataset(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
