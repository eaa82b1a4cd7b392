use thiserror::Error;

/// Errors raised by the holonomy engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("axis {axis} out of range for dimension {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },

    #[error("basis margin {margin} is smaller than the required Fourier support {support}")]
    MarginTooSmall { margin: usize, support: usize },

    #[error("non-finite state encountered at step {step} (t = {t})")]
    Divergence { step: usize, t: f64 },

    #[error("basis mismatch between operands")]
    BasisMismatch,

    #[error("shift leaves no overlap with the truncated basis")]
    EmptyOverlap,

    #[error("trajectory does not match the path step grid: {0}")]
    TrajectoryMismatch(String),

    #[error("generator does not commute with the Hamiltonian (residual {0:e})")]
    Commutation(f64),

    #[error("parameter {param} = {value} out of range: {reason}")]
    OutOfRange {
        param: &'static str,
        value: f64,
        reason: &'static str,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            got,
        })
    }
}
