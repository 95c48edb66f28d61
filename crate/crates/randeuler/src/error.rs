//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    /// A vector had the wrong (or zero) dimension.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// An argument fell outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// An experiment configuration is invalid (unknown key, bad range,
    /// incompatible scheme/noise pairing).
    #[error("configuration error: {0}")]
    Config(String),

    /// A scheme precondition derived from the declared class constants
    /// does not hold (e.g. the implicit step is not a contraction).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A trajectory produced a non-finite state component.
    #[error("divergence at step {step}: non-finite state")]
    Divergence { step: usize },

    /// The fixed-point iteration of the implicit step did not converge
    /// within the configured iteration budget.
    #[error("fixed-point iteration did not converge at step {step} after {iterations} iterations")]
    Nonconvergence { step: usize, iterations: usize },

    /// The implicit step factor 1/(1-2*lambda*h*theta) is singular.
    #[error("singular implicit step factor at theta = {theta}")]
    Singularity { theta: f64 },

    /// Logarithm of a non-positive moment factor.
    #[error("log-domain error: factor {value} is not positive")]
    LogDomain { value: f64 },

    /// The self-check of the reference integrator failed.
    #[error("reference solution accuracy check failed: {0}")]
    ReferenceAccuracy(String),

    /// A bound that is a theorem was observed violated; this indicates a
    /// bug, inconsistent class metadata, or a broken build.
    #[error("theorem bound violated: {0}")]
    BoundViolation(String),

    /// A noise model failed its own class-membership self-check.
    #[error("noise contract violated: {0}")]
    NoiseContract(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 config, 3 precondition, 4 bound
    /// violation, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Dimension(_) | Error::Domain(_) => 2,
            Error::Precondition(_) => 3,
            Error::BoundViolation(_) => 4,
            _ => 1,
        }
    }
}
