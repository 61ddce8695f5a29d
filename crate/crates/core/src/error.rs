use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("length mismatch: expected {expected} values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("state is not normalized (norm² = {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },

    #[error("operation is not unitary (Gram defect {defect:e})")]
    NonUnitary { defect: f64 },

    #[error("outcome has zero probability ({probability:e})")]
    ZeroProbabilityOutcome { probability: f64 },

    #[error("potential produced a non-finite value at node {node}, t = {time}")]
    NonFinitePotential { node: usize, time: f64 },

    #[error("unsupported operation: {0}")]
    UnsupportedOperation(&'static str),

    #[error("invalid axis {0}; expected 1 or 2")]
    InvalidAxis(usize),

    #[error("scenario mismatch: {0}")]
    ScenarioMismatch(String),
}
