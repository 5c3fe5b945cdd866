use thiserror::Error;

/// Errors produced by the analytic and simulation layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A caller-supplied argument violates a precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A geometric or kinematic quantity is undefined at the given point.
    #[error("domain error: {0}")]
    Domain(String),

    /// A matrix operation failed (singular, ill-conditioned or not PSD).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Adaptive quadrature did not reach its tolerance.
    #[error("quadrature did not converge: estimate {estimate:e}, error {achieved:e}, requested {requested:e}")]
    Quadrature { estimate: f64, achieved: f64, requested: f64 },

    /// Fixed-point iteration exhausted its budget.
    #[error("no convergence after {iterations} iterations (last change {last_change:e})")]
    Convergence { iterations: usize, last_change: f64 },

    /// Scenario configuration is invalid; `path` names the offending field.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { path: path.into(), message: message.into() }
    }
}
