use thiserror::Error;

/// Errors across the whole pipeline, grouped by who is at fault: bad
/// invocation (config), bad input data, or a broken internal invariant.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or API misuse.
    #[error("configuration: {0}")]
    Config(String),

    /// Malformed input data; `row` is the 1-based line in the source file.
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },

    /// Input data that parses but cannot be used as requested.
    #[error("data: {0}")]
    Data(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Training produced a non-finite loss.
    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },

    /// A supposedly unreachable state; always a bug.
    #[error("internal: {0}")]
    Internal(String),

    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code the CLI maps this error to: 1 for usage errors,
    /// 2 for data errors, 3 for internal failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Parse { .. } | Error::Data(_) | Error::Io { .. } => 2,
            Error::Diverged { .. } | Error::Internal(_) | Error::Json(_) => 3,
        }
    }
}
