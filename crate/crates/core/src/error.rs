use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {field}: {message}")]
    Config { field: String, message: String },

    #[error("numeric error: {0}")]
    Numeric(String),

    /// The point sits on a shock, so two characteristics reach it.
    #[error("point (t={t}, x={x}) lies on a shock; candidate feet {left_foot} and {right_foot}")]
    Ambiguous {
        t: f64,
        x: f64,
        left_foot: f64,
        right_foot: f64,
    },

    #[error("malformed corridor ensemble: {0}")]
    MalformedEnsemble(String),
}

impl Error {
    pub(crate) fn config(field: &str, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
