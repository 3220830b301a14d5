use thiserror::Error;

/// Errors surfaced by the exact kernels.
///
/// `PrecisionExhausted` is a first-class outcome, not a panic: every operation
/// that can silently lose p-adic digits reports instead of guessing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("context mismatch: {0}")]
    ContextMismatch(String),

    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("indeterminate within working precision: {0}")]
    Indeterminate(String),

    #[error("element is not a unit: {0}")]
    NotAUnit(String),

    #[error("series is not in the psi-kernel: {0}")]
    NotPsiZero(String),

    #[error("linear system inconsistent: {0}")]
    SingularSystem(String),

    #[error("invalid change of basis: {0}")]
    InvalidChangeOfBasis(String),

    #[error("rank undefined: {0}")]
    RankUndefined(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
