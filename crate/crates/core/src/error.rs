use thiserror::Error;

use crate::problemdef::ParseError;

/// Errors produced by the numerical library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Fractional order outside the range supported by an operator.
    #[error("order error: {0}")]
    Order(String),

    /// Argument outside the supported range of an approximation.
    #[error("out of range: {0}")]
    OutOfRange(String),

    /// A series, quadrature or iteration failed to reach its accuracy target.
    #[error("accuracy error: {0}")]
    Accuracy(String),

    /// Invalid or inconsistent arguments.
    #[error("argument error: {0}")]
    Argument(String),

    /// Expression evaluation failed at a grid node.
    #[error("evaluation error at node {node}: {message}")]
    Eval { node: usize, message: String },

    /// Non-finite values appeared inside an iterative method.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// The multiplier search could not bracket a root of the constraint defect.
    #[error("bracketing error: {0}")]
    Bracketing(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    /// Problem file schema or content violation.
    #[error("problem file error: {0}")]
    Problem(String),
}

impl Error {
    /// True for errors caused by bad user input rather than numerical failure.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Order(_) | Error::Argument(_) | Error::Parse(_) | Error::Problem(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
