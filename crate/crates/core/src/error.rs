use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid coalition key {key:?}: {reason}")]
    InvalidCoalitionKey { key: String, reason: String },

    #[error("no value recorded for coalition {{{0}}}")]
    MissingCoalition(String),

    #[error("{what} with n = {n} exceeds the enumeration ceiling of {max}")]
    TooLarge { what: &'static str, n: usize, max: usize },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("valuation violates {axiom}: {detail}")]
    AxiomViolation { axiom: &'static str, detail: String },

    #[error("target {target} outside achievable range [{low}, {high}]")]
    TargetOutOfRange { target: f64, low: f64, high: f64 },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("party sizes sum to {requested} but only {available} points exist")]
    SizesExceedData { requested: usize, available: usize },

    #[error("cannot standardize a vector with zero variance")]
    ZeroVariance,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
