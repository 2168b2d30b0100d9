use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain size mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("empty sample set")]
    EmptySamples,

    #[error("interval [{lo},{hi}] carries zero conditional mass")]
    ZeroMass { lo: usize, hi: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mass sums to {0}, too far from 1 to renormalize")]
    BadTotalMass(f64),

    #[error("membership check not supported for {0}")]
    UnsupportedMembership(String),

    #[error("no projection oracle for {0}")]
    UnsupportedProjection(String),

    #[error("linear program failed: {0}")]
    LpFailure(String),

    #[error("budget guard violated: {0}")]
    BudgetExceeded(String),

    #[error("sample source exhausted")]
    SourceExhausted,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
