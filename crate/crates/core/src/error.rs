use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input violates a documented domain restriction.
    #[error("domain error: {0}")]
    Domain(String),

    /// A computed quantity violates an invariant that holds for every valid
    /// input; this points at a bug or at corrupted upstream values.
    #[error("internal consistency: {0}")]
    Consistency(String),

    /// Fixed-step integration did not converge under step doubling.
    #[error(
        "integration did not converge: step {step:e} s, step-doubling defect {defect:e} > {tolerance:e} (scale {scale:e})"
    )]
    Integration {
        step: f64,
        defect: f64,
        tolerance: f64,
        scale: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
