use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("undefined margin: weight vector has zero norm")]
    UndefinedMargin,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("point strictly inside the forbidden band: margin {margin} in (0, {threshold})")]
    ForbiddenBand { margin: f64, threshold: f64 },

    #[error("invalid vector: {0}")]
    InvalidVector(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid too large: {candidates} candidates exceeds the limit of {limit}")]
    GridTooLarge { candidates: u128, limit: u128 },

    #[error("infeasible stream: radius {radius} is smaller than margin {gamma}")]
    InfeasibleStream { radius: f64, gamma: f64 },

    #[error("margin too demanding: {attempts} rejections without an admissible point")]
    MarginTooDemanding { attempts: u64 },

    #[error("bound unverifiable: {0}")]
    BoundUnverifiable(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
