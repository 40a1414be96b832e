use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("value {value} outside domain [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },

    #[error("admissibility: {0}")]
    Admissibility(String),

    #[error("degenerate state at node {node} (xi = {xi}): phi/xi = {value}")]
    Degenerate { node: usize, xi: f64, value: f64 },

    #[error("configuration: {0}")]
    Config(String),

    #[error("grid mismatch: {0}")]
    Shape(String),

    #[error("weighted division by xi^{m} needs vanish_order >= {m}, field declares {declared}")]
    WeightedDivision { m: f64, declared: f64 },

    #[error("power {i} exceeds closure order s = {s}")]
    Order { i: usize, s: usize },

    #[error("non-finite value at hierarchy level {level}")]
    Overflow { level: usize },

    #[error("time derivative of phi is not cached on this operator stack")]
    MissingTimeDerivative,

    #[error("non-finite state at step {step}")]
    NonFinite { step: usize },

    #[error("newton solve did not converge at step {step} (residual {residual:e})")]
    Newton { step: usize, residual: f64 },

    #[error("certification bounds broken at t = {time}: {reason}")]
    Certification { time: f64, reason: String },

    #[error("reconstruction radicand too small at node {node} (xi = {xi})")]
    Reconstruction { node: usize, xi: f64 },

    #[error("picard iterate {iterate} degenerated: {source}")]
    Iteration {
        iterate: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
