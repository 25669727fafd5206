use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument or intermediate value is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Deterministic strategy enumeration would exceed the configured guard.
    #[error("enumeration guard exceeded: {count} strategies > limit {limit}")]
    Capacity { count: u128, limit: u128 },

    /// Malformed external input (trace log, task file).
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
