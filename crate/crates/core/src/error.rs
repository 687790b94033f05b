use thiserror::Error;

/// Failure modes across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("model has no alternatives")]
    EmptyModel,
    #[error("scale must be finite and positive, got {0}")]
    NonPositiveScale(f64),
    #[error("nest {nest}: scale mu_ell = {mu_ell} exceeds top-level scale mu = {mu}")]
    NestScaleTooLarge { nest: usize, mu_ell: f64, mu: f64 },
    #[error("nest {nest}: alternative {alt} has share {share}; shares must be finite and positive")]
    InvalidShare { nest: usize, alt: usize, share: f64 },
    #[error("nest {nest}: alternative index {alt} out of range for n = {n}")]
    AlternativeOutOfRange { nest: usize, alt: usize, n: usize },
    #[error("alternative {alt}: shares sum to {sum}, expected 1")]
    SharesNotUnit { alt: usize, sum: f64 },
    #[error("alternative {alt} belongs to no nest")]
    OrphanAlternative { alt: usize },
    #[error("generating function requires positive arguments (entry {index} = {value})")]
    NonPositiveInput { index: usize, value: f64 },
    #[error("entry {index} is not finite")]
    NonFinite { index: usize },
    #[error("not a probability vector: {0}")]
    NotInSimplex(String),
    #[error("count must be at least {min}, got {got}")]
    BadCount { got: usize, min: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("operation requires a {expected} model")]
    WrongModelKind { expected: &'static str },
    #[error("density mode value must be finite and positive, got {0}")]
    BadDensity(f64),

    #[error("point is too close to the simplex boundary (min entry {min} < 1e-6)")]
    BoundaryPoint { min: f64 },
    #[error("conjugate solver did not converge after {iterations} iterations (residual {residual})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("matrix is not in class A: {0}")]
    NotClassA(String),
    #[error("exact norm enumeration limited to n <= {max}, got {n}")]
    TooLarge { n: usize, max: usize },

    #[error("oracle returned a non-finite subgradient at iteration {k}")]
    OracleFailure { k: usize },
    #[error("state was run without history")]
    NoHistory,

    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("demand entry {index} is negative ({value})")]
    NegativeDemand { index: usize, value: f64 },
    #[error("internal prices infeasible: {0}")]
    InfeasiblePrices(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
