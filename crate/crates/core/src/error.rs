//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Mode 0 requested on a model posed on zero-mean functions.
    #[error("mode k=0 does not exist on the zero-mean model `{model}`")]
    ZeroModeOnZeroMeanModel { model: &'static str },

    /// A parameter violated its positivity (or other) domain constraint.
    #[error("parameter `{name}` = {value} is outside its domain ({constraint})")]
    InvalidParameter {
        name: String,
        value: f64,
        constraint: &'static str,
    },

    /// A parameter name was not recognized by the model.
    #[error("model `{model}` has no parameter named `{name}`")]
    UnknownParameter { model: &'static str, name: String },

    /// Missing required fixed parameter for a kernel solve.
    #[error("kernel solve for `{model}` requires fixed parameter `{name}`")]
    MissingParameter { model: &'static str, name: &'static str },

    /// No admissible kernel parameters exist for the requested wavenumbers.
    #[error("no positive kernel parameters for (k1,k2)=({k1},{k2}): {reason}")]
    KernelUnsolvable { k1: u32, k2: u32, reason: String },

    /// The linear symbol vanishes at wavenumbers other than +-k1, +-k2.
    #[error("kernel is not simple: l vanishes at extra wavenumbers {offending:?}")]
    KernelNotSimple { offending: Vec<u32> },

    /// Generic domain violation (argument outside an operation's precondition).
    #[error("domain error: {0}")]
    Domain(String),

    /// A computation produced NaN or infinity.
    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    /// Newton iteration on the complement equation failed to converge.
    #[error("Newton did not converge after {iterations} iterations (residual {residual:.3e})")]
    NewtonDidNotConverge { iterations: usize, residual: f64 },

    /// The sine-projection divisor |sin(k1 k2 (theta2-theta1))| is too small.
    #[error(
        "phase separation too small: |sin(k1 k2 dtheta)| = {value:.3e} < {min:.3e}; \
         choose theta with larger separation"
    )]
    DivisorTooSmall { value: f64, min: f64 },

    /// The surface-tension square root left its safe branch.
    #[error(
        "square-root branch safety violated: min over grid of (Du)^2+(1+Hu)^2 = {min:.3e} < 0.25; \
         reduce the amplitude"
    )]
    BranchSafety { min: f64 },

    /// The exact T-scaling law was violated beyond tolerance (implementation bug).
    #[error("scaling law violated: relative spread {spread:.3e} exceeds {tolerance:.1e}")]
    ScalingLawViolation { spread: f64, tolerance: f64 },

    /// Malformed request (e.g. k1 >= k2).
    #[error("invalid input: {0}")]
    BadInput(String),
}

impl Error {
    pub(crate) fn bad_input(msg: impl Into<String>) -> Self {
        Error::BadInput(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
