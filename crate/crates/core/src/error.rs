use thiserror::Error;

/// Errors raised by the bandit core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum BanditError {
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("non-finite value at index {index} in {what}")]
    NonFinite { what: &'static str, index: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("history kind mismatch: history is {history}, entry/request is {other}")]
    HistoryKind { history: String, other: String },
    #[error("arm is not registered with the sampled GP table")]
    UnregisteredArm,
    #[error("Cholesky factorization failed even with jitter {jitter:e}; arms are likely duplicated")]
    Cholesky { jitter: f64 },
    #[error("RO-LLM leader mass {mass:e} is negative: mu={mu} is too small for K={arms} and gamma={gamma}; need mu + gamma*gap large enough that sum of non-leader masses <= 1")]
    LeaderMassNegative { mass: f64, mu: f64, gamma: f64, arms: usize },
    #[error("dataset error: {0}")]
    Dataset(String),
    #[error("predictor failure: {0}")]
    Predictor(String),
    #[error(transparent)]
    Parse(#[from] crate::predictor::ParseError),
}

pub type Result<T, E = BanditError> = std::result::Result<T, E>;
