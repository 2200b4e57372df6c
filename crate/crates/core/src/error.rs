use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the recommendation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{path}: file is empty")]
    EmptyFile { path: String },

    #[error("rejected {rejected} of {total} records, above the {cap} error-rate cap")]
    ErrorRateExceeded {
        rejected: usize,
        total: usize,
        cap: f64,
    },

    #[error("duplicate review_id {0:?}")]
    DuplicateReviewId(String),

    #[error("unknown place {0:?}")]
    UnknownPlace(String),

    #[error("user {0:?} has no training data (cold start)")]
    ColdStart(String),

    #[error("training set for {0} contains a single class")]
    SingleClass(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("training diverged at epoch {epoch}, row {row}: loss {loss}")]
    Diverged { epoch: usize, row: usize, loss: f64 },

    #[error("explanation graph is empty: no positively reviewed aspects among {places} places")]
    EmptyGraph { places: usize },

    #[error("no users with at least {min_reviews} reviews")]
    NoEligibleUsers { min_reviews: usize },

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

impl Error {
    /// The innermost error, looking through fold context.
    pub fn root(&self) -> &Error {
        match self {
            Error::Fold { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
