use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A model or distribution parameter is outside its valid range.
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    Parameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// An argument violates an operation's domain (negative order, bad lengths, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The tridiagonal eigensolver failed to converge.
    #[error("eigensolver did not converge for eigenvalue index {index} after {iterations} iterations")]
    NoConvergence { index: usize, iterations: usize },

    /// Two routes to the same quantity disagree beyond tolerance.
    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    /// An exact beta-moment expectation hit a zero denominator.
    #[error("pole in exact expectation: {0}")]
    Pole(String),

    /// A simulated state became NaN or infinite.
    #[error("non-finite state at step {step}")]
    NonFinite { step: usize },

    /// An operation was called on data that lacks what it needs.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Polynomial degree exceeds the configured cap.
    #[error("polynomial degree {degree} exceeds cap {cap}")]
    DegreeCap { degree: usize, cap: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
