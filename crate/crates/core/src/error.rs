use thiserror::Error;

/// Error type shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A config file failed to parse against its schema.
    #[error("schema error in {path}: {message}")]
    Schema { path: String, message: String },

    /// A constructed value violates an invariant; `field` names the offender.
    #[error("validation error: field `{field}`: {message}")]
    Validation { field: String, message: String },

    /// An argument is outside the documented domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical procedure failed (singular assembly, no bracketing, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Input data is unusable (NaN residuals, empty trace, ...).
    #[error("data error: {0}")]
    Data(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn validation(field: &str, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
