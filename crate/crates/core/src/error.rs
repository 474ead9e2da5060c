use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("counts must sum to S: got sum {sum}, S = {total}")]
    CountMismatch { sum: u128, total: u64 },
    #[error("a distribution needs at least one element")]
    EmptyUniverse,
    #[error("S must be positive")]
    ZeroDenominator,
    #[error("distributions live on different universes ({0} vs {1} elements)")]
    SizeMismatch(usize, usize),
    #[error("absolute continuity violated at element {index}: p > 0 but q = 0")]
    AbsoluteContinuity { index: usize },
    #[error("query budget must be a power of two >= 2, got {0}")]
    BadBudget(u64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("promise violated: {0}")]
    Promise(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
