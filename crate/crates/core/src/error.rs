use thiserror::Error;

/// Errors raised by the numerical routines of the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("inconsistent boundary data: {0}")]
    InconsistentBoundary(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures of an iterative method to reach its tolerance.
    pub fn is_convergence(&self) -> bool {
        matches!(self, Error::NoConvergence(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
