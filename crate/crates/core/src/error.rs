use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A lookup past the end of a precomputed table.
    #[error("{what} = {value} is outside the table range (limit {limit})")]
    OutOfRange {
        what: &'static str,
        value: f64,
        limit: f64,
    },

    /// A configured work, memory or enumeration cap would be exceeded.
    #[error("{what} exceeds the configured cap {cap}")]
    CapExceeded { what: String, cap: u64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A constructive procedure could not produce its object at this scale.
    #[error("construction failed: {0}")]
    Construction(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn cap(what: impl Into<String>, cap: u64) -> Self {
        Error::CapExceeded {
            what: what.into(),
            cap,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
