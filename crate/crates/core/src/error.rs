use alloc::string::String;

/// Errors raised by the estimators and data generators.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("basis order must be odd and positive, got {0}")]
    InvalidOrder(usize),
    #[error("grid of {grid} nodes cannot resolve basis order {order}; need at least {needed}")]
    Resolution {
        order: usize,
        grid: usize,
        needed: usize,
    },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("projection failed: {0}")]
    Projection(&'static str),
    #[error("segment is empty")]
    EmptySegment,
    #[error("kernel is not symmetric (largest deviation {0:e})")]
    NotSymmetric(f64),
    #[error("kernels live in different representations")]
    RepresentationMismatch,
    #[error("function is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("index {index} outside 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("non-finite value in input")]
    NonFinite,
    #[error("eigensolver did not converge")]
    NoConvergence,
    #[error("invalid value for `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
