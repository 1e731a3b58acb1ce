use thiserror::Error;

use crate::space::ValidationReport;

/// Errors raised by the analysis routines.
///
/// The variants fall into three families that the CLI maps onto distinct exit
/// codes: structural problems with the input (`Dimension`, `InvalidArgument`,
/// `Parse`), axiom violations (`Validation`, `NoInvariantMeasure`,
/// `NotReversible`), and unmet hypotheses of a requested inequality
/// (`Hypothesis`).
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("space violates {} axiom(s): {}", .0.violations.len(), .0.summary())]
    Validation(Box<ValidationReport>),

    #[error("no invariant measure with full support")]
    NoInvariantMeasure,

    #[error("not reversible: detailed balance residual {0:e}")]
    NotReversible(f64),

    #[error("hypothesis failed: {0}")]
    Hypothesis(String),

    #[error("solver failure: {0}")]
    Solver(String),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
