use alloc::string::String;

/// Errors raised by the pure core operations.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("empty query text")]
    EmptyQuery,
    #[error("verdicts come from different configurations ({first} vs {other})")]
    MixedFingerprints { first: String, other: String },
    #[error("records mix languages or stages")]
    MixedRecords,
    #[error("invalid calendar date {0:?}")]
    InvalidDate(String),
    #[error("unknown language {0:?}")]
    UnknownLanguage(String),
    #[error("{0}")]
    Invalid(String),
}
