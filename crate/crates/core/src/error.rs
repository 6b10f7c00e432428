use thiserror::Error;

/// Failure modes shared by every measurement pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The requested operation is not available for this manifold or dimension.
    #[error("unsupported: {0}")]
    Capability(String),
    /// A caller-side precondition was violated.
    #[error("contract violation: {0}")]
    Contract(String),
    /// A parameter lies outside the mathematical domain of the formula.
    #[error("domain error: {0}")]
    Domain(String),
    /// A user supplied policy or configuration failed validation.
    #[error("validation failed: {0}")]
    Validation(String),
    /// The quadrature grid is too coarse for the function being measured.
    #[error("grid resolution {actual} is below the required {required}")]
    Resolution { required: usize, actual: usize },
    /// A numerical routine did not reach its accuracy target.
    #[error("accuracy: {0}")]
    Accuracy(String),
    /// A least-squares design is too collinear to identify the requested exponent.
    #[error("ill-conditioned fit: {0}")]
    Conditioning(String),
    /// Every candidate projected to zero: the window misses the spectrum.
    #[error("every candidate projects to zero in the window")]
    EmptyWindow,
    /// A parameter is outside the range where the law applies.
    #[error("out of range: {0}")]
    Range(String),
}

pub type Result<T> = std::result::Result<T, Error>;
