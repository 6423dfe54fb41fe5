use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input {value}")]
    NonFinite { value: f64 },

    #[error("probability {value} outside the open interval (0, 1)")]
    ProbabilityOutOfRange { value: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("envelope violated at x = {x}: value {value} not in [{lower}, {upper}]")]
    EnvelopeViolation {
        x: f64,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("tail is not integrable on [a, ∞): {0}")]
    NonIntegrable(String),

    #[error("candidate must vanish at s = 1, got {value}")]
    CandidateBoundary { value: f64 },

    #[error("empty sample set")]
    EmptySamples,

    #[error("node budget of {limit} exceeded while evaluating a tree")]
    NodeLimit { limit: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed CSV at line {line}: {reason}")]
    Csv { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
