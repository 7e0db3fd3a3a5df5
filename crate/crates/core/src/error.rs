use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain box: {0}")]
    InvalidDomain(String),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("curve node {node} lies outside the domain box")]
    NodeOutsideDomain { node: usize },

    #[error("invalid atom parameters: alpha = {alpha}, beta = {beta}")]
    InvalidParameters { alpha: f64, beta: f64 },

    #[error("a constant curve has infinite canonical mass when alpha = 0")]
    ConstantCurveWithoutMassPenalty,

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("atoms {0} and {1} have identical node arrays")]
    DuplicateAtoms(usize, usize),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid observation: {0}")]
    InvalidObservation(String),

    #[error("sample index {index} out of range for {count} samples")]
    SampleIndexOutOfRange { index: usize, count: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("enumeration budget exceeded: {candidates} candidates > {budget}")]
    BudgetExceeded { candidates: f64, budget: f64 },

    #[error("tracking failed: {0}")]
    Tracking(String),
}

pub type Result<T> = std::result::Result<T, Error>;
