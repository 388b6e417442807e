use thiserror::Error;

/// Errors surfaced by the simulation and verification primitives.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the admissible range of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical procedure failed to reach its tolerance (factorization,
    /// quadrature, bisection).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A checked model assumption does not hold numerically.
    #[error("assumption violation: {0}")]
    AssumptionViolation(String),

    /// The requested parameterization is outside the supported families.
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    /// Predicted cost of a simulation exceeds the desk-scale budget.
    #[error("budget exceeded: {0}")]
    Budget(String),

    /// The normalization a(t)h(t) vanishes or is not finite.
    #[error("degenerate scale: {0}")]
    DegenerateScale(String),

    /// An estimator has no defined value on the given input.
    #[error("undefined estimate: {0}")]
    UndefinedEstimate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
