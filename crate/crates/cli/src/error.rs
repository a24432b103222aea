use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: parse error at line {line}, column {column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        field: Option<String>,
        message: String,
    },

    #[error("invalid field `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("{module}: {source}")]
    Core {
        module: &'static str,
        #[source]
        source: kpzldp_core::Error,
    },

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    pub fn validation(field: &str, message: impl Into<String>) -> Self {
        CliError::Validation {
            field: field.to_string(),
            message: message.into(),
        }
    }

    pub fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }

    /// Attaches the module name to a core error; configuration errors become
    /// validation errors naming their field.
    pub fn core(module: &'static str) -> impl Fn(kpzldp_core::Error) -> Self {
        move |source| match source {
            kpzldp_core::Error::Config { field, message } => CliError::Validation { field, message },
            source => CliError::Core { module, source },
        }
    }

    /// Machine-readable form printed on failure.
    pub fn to_json(&self) -> Value {
        let body = match self {
            CliError::Parse {
                path,
                line,
                column,
                field,
                message,
            } => json!({
                "kind": "parse",
                "path": path,
                "line": line,
                "column": column,
                "field": field,
                "message": message,
            }),
            CliError::Validation { field, message } => json!({
                "kind": "validation",
                "field": field,
                "message": message,
            }),
            CliError::Core { module, source } => json!({
                "kind": core_kind(source),
                "module": module,
                "message": source.to_string(),
            }),
            CliError::Io { path, message } => json!({
                "kind": "io",
                "path": path,
                "message": message,
            }),
        };
        json!({ "error": body })
    }
}

fn core_kind(err: &kpzldp_core::Error) -> &'static str {
    match err {
        kpzldp_core::Error::Domain(_) => "domain",
        kpzldp_core::Error::Config { .. } => "validation",
        kpzldp_core::Error::Numeric(_) => "numeric",
        kpzldp_core::Error::Ambiguous { .. } => "ambiguous",
        kpzldp_core::Error::MalformedEnsemble(_) => "malformed-ensemble",
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
