use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("linear system (I - gamma * P) is singular")]
    Singular,

    #[error("enumeration budget exceeded: {count} deterministic joint policies, budget is {budget}")]
    BudgetExceeded { count: u128, budget: u128 },

    #[error("trace is empty")]
    EmptyTrace,

    #[error("sample set is empty")]
    EmptySamples,

    #[error("decomposition table must have {expected} entries, got {actual}")]
    IncompleteTable { expected: usize, actual: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
