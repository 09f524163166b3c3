use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("vector must have at least one coordinate")]
    Empty,
    #[error("division by zero at coordinate {0}")]
    DivisionByZero(usize),
    #[error("square root of negative value at coordinate {0}")]
    NegativeSqrt(usize),
    #[error("non-finite value at coordinate {0}")]
    NonFinite(usize),
    #[error("invalid box bounds: lo = {lo} > hi = {hi}")]
    InvalidBounds { lo: f64, hi: f64 },
    #[error("step index must be >= 1")]
    ZeroStep,
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperParam(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("optimizer diverged at step {step}")]
    Diverged { step: u64 },
    #[error("{0} is unavailable for this problem")]
    Unavailable(&'static str),
    #[error("invalid record: {0}")]
    InvalidRecord(String),
}
