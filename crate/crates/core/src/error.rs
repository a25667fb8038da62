use alloc::string::String;

/// Errors raised by the analytic solvers, the simulator and the optimizers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("closed loop is not stable: spectral radius {0}")]
    Unstable(f64),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("state norm {norm:e} exceeded the overflow guard at step {step}")]
    NumericOverflow { step: u64, norm: f64 },
    #[error("objective {value} left the sub-level set at step {step}")]
    DivergenceDetected { step: usize, value: f64 },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn mismatch(msg: impl Into<String>) -> Error {
    Error::DimensionMismatch(msg.into())
}
