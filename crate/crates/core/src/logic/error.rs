use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LogicError {
    #[error("unknown sort `{0}`")]
    UnknownSort(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("duplicate sort `{0}`")]
    DuplicateSort(String),
    #[error("duplicate symbol `{0}`")]
    DuplicateSymbol(String),
    #[error("sort `{0}` has an empty carrier")]
    EmptyCarrier(String),
    #[error("sort `{sort}` lists `{value}` twice")]
    DuplicateElement { sort: String, value: String },
    #[error("value `{value}` is not in the carrier of `{sort}`")]
    OutOfCarrier { sort: String, value: String },
    #[error("ill-typed expression: {0}")]
    IllTyped(String),
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("interpretation has no value for random fact {0}")]
    Incomplete(String),
    #[error("rigid symbol `{0}` has no interpretation")]
    MissingRigid(String),
    #[error("flexible symbol `{0}` must not have a rigid interpretation")]
    FlexibleInterpreted(String),
    #[error("rigid table for `{symbol}`: {reason}")]
    RigidTable { symbol: String, reason: String },
    #[error("branches of an exclusive disjunction both hold: {0}")]
    ExclusivityViolated(String),
    #[error("malformed structure document: {0}")]
    Document(String),
}

pub type LogicResult<T> = Result<T, LogicError>;
