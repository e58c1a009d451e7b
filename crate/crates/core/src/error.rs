use thiserror::Error;

use crate::geometry::ManifoldId;

/// Errors produced anywhere in the library.
///
/// Variants are coarse on purpose: the C ABI maps each one to a stable status
/// code, and the runner records the display string next to the failed item.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{lambda} is not an eigenvalue of {manifold}")]
    NotAnEigenvalue { manifold: ManifoldId, lambda: u64 },

    #[error("region escapes its chart: {0}")]
    ChartEscape(String),

    #[error("non-finite value {value} at {point:?}")]
    NonFinite { point: Vec<f64>, value: f64 },

    #[error("mass underflow ({mass:e}) on cube centered at {center:?}")]
    MassUnderflow { center: Vec<f64>, mass: f64 },

    #[error("resolution {given} is below the required {required}")]
    ResolutionTooLow { given: usize, required: usize },

    #[error("resolution {given} exceeds the memory guard {limit}")]
    ResolutionTooHigh { given: usize, limit: usize },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("the nodal set is empty")]
    EmptyNodalSet,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("config: {0}")]
    Config(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
