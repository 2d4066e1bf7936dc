use thiserror::Error;

/// Errors raised by the numerical laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("variable x{index} at byte {offset} exceeds dimension {n}")]
    VariableOutOfRange { index: usize, n: usize, offset: usize },

    #[error("imaginary literal `i` is only allowed in the electric potential slot")]
    ImaginaryLiteral,

    #[error("imaginary part {imag:e} in a real-valued slot at {location}")]
    ImaginaryPart { imag: f64, location: String },

    #[error("non-finite value at {location}")]
    NonFinite { location: String },

    #[error("invalid signature: {0}")]
    InvalidSignature(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid time grid: {0}")]
    InvalidTimeGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite integrand at quadrature node {node} (s = {s})")]
    NonFiniteIntegrand { node: usize, s: f64 },

    #[error("line integral of A along the ray to {point:?} diverges: {detail}")]
    ConditionA { point: Vec<f64>, detail: String },

    #[error("postcondition failed: {0}")]
    Postcondition(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("interpolation outside stored domain: {0}")]
    Interpolation(String),

    #[error("unstable integration: {0}")]
    Instability(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
