use thiserror::Error;

/// Errors raised by the library. Each variant carries enough context to be
/// reported on a single line by the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A serialized model or report could not be decoded.
    #[error("parse error in field `{field}`: {message}")]
    Parse { field: String, message: String },

    /// Input data rejected during ingestion. `rows` are 1-based line numbers.
    #[error("malformed data in rows {rows:?}: {message}")]
    Data { rows: Vec<usize>, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Short name of the module family the error originates from.
    pub fn origin(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "argument",
            Error::Parse { .. } => "format",
            Error::Data { .. } => "data",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
