use crate::logic::LogicError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExpectationError {
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error("cannot decompose `{subformula}`: {reason}")]
    Decomposition { subformula: String, reason: String },
    #[error("random fact {0} is not in the distribution")]
    UnknownFact(String),
    #[error("random fact {0} has a non-numeric range")]
    NotNumeric(String),
    #[error("value index {value} outside the range of {fact}")]
    InvalidPin { fact: String, value: u32 },
    #[error("unsupported expression: {0}")]
    Unsupported(String),
    #[error("distribution does not match the fact set: {0}")]
    Shape(String),
}

pub type ExpectationResult<T> = Result<T, ExpectationError>;
