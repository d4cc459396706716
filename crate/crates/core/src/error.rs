use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input")]
    NonFinite,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty range [{start}, {end})")]
    EmptyRange { start: i128, end: i128 },

    #[error("index {index} out of range (count {count})")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("exact integration requires character data: {0}")]
    NotCharacter(String),

    #[error("actions do not commute")]
    NotCommuting,

    #[error("sieve limit {requested} exceeds memory budget {budget}")]
    SieveTooLarge { requested: u64, budget: u64 },

    #[error("sieve covers [2, {limit}] but {requested} was requested")]
    SieveUnavailable { requested: u64, limit: u64 },

    #[error("bad sieve cache: {0}")]
    BadCache(String),

    #[error("parse error at column {column}: {message}")]
    Parse { column: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
