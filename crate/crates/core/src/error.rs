use thiserror::Error;

/// Errors produced by the estimators, solvers and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(
        "sinkhorn did not converge after {iterations} iterations \
         (marginal L1 violation {violation:.3e})"
    )]
    NotConverged { iterations: usize, violation: f64 },

    #[error("instance of size {size} exceeds the exact oracle limit of {limit} cells")]
    OracleScale { size: usize, limit: usize },

    #[error("labels are required for {0}")]
    MissingLabels(&'static str),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
