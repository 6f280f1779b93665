use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    /// The config is malformed or inconsistent; `field` is a dotted path.
    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Core(#[from] fpkit_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Attach a config field to a core validation error.
    pub fn at(field: &str) -> impl FnOnce(fpkit_core::Error) -> CliError + '_ {
        move |e| CliError::config(field, e.to_string())
    }
}
