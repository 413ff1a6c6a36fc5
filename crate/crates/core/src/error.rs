use thiserror::Error;

/// Errors raised by the library.
///
/// The variants are grouped so a driver can map them onto exit statuses:
/// validation problems, capacity limits, and failed experiment assertions.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("degenerate matrix: {0}")]
    Degenerate(String),

    #[error("unsupported distribution: {0}")]
    Unsupported(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("codebook construction exhausted {attempts} attempts (d={d}, N={n}, epsilon={epsilon})")]
    Exhausted {
        attempts: usize,
        d: usize,
        n: usize,
        epsilon: f64,
    },

    #[error("assertion failed: {0}")]
    Assertion(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn capacity(msg: impl Into<String>) -> Self {
        Error::Capacity(msg.into())
    }

    /// Process exit status conventionally associated with this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Capacity(_) | Error::Exhausted { .. } => 2,
            Error::Assertion(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
