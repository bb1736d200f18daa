use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical routine failed to converge or produced a non-finite value.
    #[error("numeric error: {message}")]
    Numeric {
        message: String,
        /// Textual dump of the offending matrix, when one is involved.
        dump: Option<String>,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric {
            message: msg.into(),
            dump: None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
