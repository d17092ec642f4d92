use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("calibration is not separating: coordinate {0} lies in every kernel")]
    NotSeparating(usize),

    #[error("operator is not quotient bounded: seminorm {member} has infinite p-hat")]
    NotQuotientBounded { member: usize },

    #[error("resolvent is singular at lambda = {0}")]
    Singular(Complex64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("operators do not commute: commutator norm {commutator} exceeds {allowed}")]
    NonCommuting { commutator: f64, allowed: f64 },

    #[error("infeasible contour: {0}")]
    InfeasibleContour(String),

    #[error("function is not analytic on the contour: {0}")]
    NotAnalytic(String),

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn non_convergence(msg: impl Into<String>) -> Self {
        Error::NonConvergence(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
