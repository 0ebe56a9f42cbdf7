use std::fmt;

use crate::model::Violation;

/// Errors surfaced by solvers, evaluators, and the file-format layer.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// The instance failed validation; every violated rule is listed.
    InvalidInstance(Vec<Violation>),
    /// An argument is outside the operation's domain.
    InvalidArgument(String),
    /// The request exceeds a hard capacity limit of the chosen method.
    Capacity(String),
    /// A strategy was paired with an instance it was not solved for.
    StrategyMismatch(String),
    /// A stage table was queried before the pass that fills it had run.
    Sequencing(String),
    /// A file did not match the expected schema.
    Schema(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInstance(violations) => {
                write!(f, "invalid instance ({} violations):", violations.len())?;
                for v in violations {
                    write!(f, "\n  {v}")?;
                }
                Ok(())
            }
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::Capacity(msg) => write!(f, "capacity exceeded: {msg}"),
            Error::StrategyMismatch(msg) => write!(f, "strategy mismatch: {msg}"),
            Error::Sequencing(msg) => write!(f, "sequencing error: {msg}"),
            Error::Schema(msg) => write!(f, "schema error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}
