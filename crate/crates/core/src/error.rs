use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} = {value} exceeds the supported bound {limit}")]
    OutOfRange {
        what: &'static str,
        value: u64,
        limit: u64,
    },

    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    #[error("exact division failed: nonzero remainder")]
    NotExactlyDivisible,

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    #[error("invalid spec field `{field}`: {reason}")]
    InvalidSpec { field: String, reason: String },
}

impl Error {
    pub(crate) fn spec(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidSpec {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
