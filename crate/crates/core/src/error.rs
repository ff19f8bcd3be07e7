use thiserror::Error;

/// Errors raised anywhere in the crate.
///
/// The variants map onto process exit codes in the command-line front end:
/// configuration and domain problems exit with 2, numeric and resource
/// failures with 3.
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the domain of an operation (unknown vertex, reducible
    /// matrix, non-stochastic kernel, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid parameters or unknown family names.
    #[error("configuration error: {0}")]
    Config(String),

    /// An iterative method failed to converge.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A memory or size budget was exceeded.
    #[error("resource error: {0}")]
    Resource(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Config(_) => "config",
            Error::Numeric(_) => "numeric",
            Error::Resource(_) => "resource",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numeric(_) | Error::Resource(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
