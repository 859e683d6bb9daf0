use thiserror::Error;

use crate::gammadiv::DivergenceReport;

/// Convenience alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by constructors and solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Two objects that must share a dimension do not.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A cost specification violates nonnegativity, the zero diagonal or the
    /// triangle inequality, or is evaluated outside its domain.
    #[error("invalid cost: {0}")]
    InvalidCost(String),

    /// The nearest-point aggregation is not unique.
    #[error("distance tie: atom {atom} is equidistant from support points {first} and {second}")]
    DistanceTie {
        atom: usize,
        first: usize,
        second: usize,
    },

    /// A closed form is evaluated outside the region where it exists.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative solver exhausted its budget. The best iterate is kept
    /// when one is available so callers can still inspect it.
    #[error("{solver} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
        best: Option<Box<DivergenceReport>>,
    },

    /// Malformed measure or configuration document.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// `true` for [`Error::NonConvergence`].
    pub fn is_non_convergence(&self) -> bool {
        matches!(self, Error::NonConvergence { .. })
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}
