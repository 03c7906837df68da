use thiserror::Error;

/// Errors raised by the optimizers, parameter calculators and oracles.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid privacy budget: {0}")]
    Budget(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("loss `{loss}` is not differentiable at the requested point")]
    NonDifferentiable { loss: &'static str },

    #[error("loss `{0}` is non-smooth; run it through the Moreau smoothing pipeline (proxgd) instead")]
    NonSmoothLoss(&'static str),

    #[error("non-finite value in iterate at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(
        "optimization tolerance not reached after {iterations} iterations: \
         certified gap {achieved:e} > target {target:e}"
    )]
    ToleranceNotReached {
        achieved: f64,
        target: f64,
        iterations: usize,
    },

    #[error(
        "no closed-form population oracle for distribution `{distribution}` with loss `{loss}`; \
         request Monte-Carlo mode explicitly"
    )]
    UnregisteredPair {
        distribution: &'static str,
        loss: &'static str,
    },

    #[error("loss `{0}` has no exact proximal oracle")]
    NoExactProx(&'static str),

    #[error("certified constant check failed for `{loss}`: {detail}")]
    Certification { loss: &'static str, detail: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}
