use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Invalid configuration: shapes, architectures, hyperparameters.
    #[error("configuration error: {0}")]
    Config(String),
    /// A NaN or infinity appeared in a value or gradient.
    #[error("numeric failure: {0}")]
    Numeric(String),
    /// An API was called outside its contract.
    #[error("usage error: {0}")]
    Usage(String),
    #[error("parse error{}: {message}", dimension.as_ref().map(|d| alloc::format!(" in dimension '{d}'")).unwrap_or_default())]
    Parse {
        dimension: Option<String>,
        message: String,
    },
    /// The environment failed in a way that cannot be mapped to an anomaly.
    #[error("environment failure: {0}")]
    Environment(String),
    #[error("space too large for exhaustive search: {size:e} points (limit {limit:e})")]
    TooLarge { size: f64, limit: f64 },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
