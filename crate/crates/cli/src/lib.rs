//! Library half of the `lhskit` binary: config loading, the pipelines
//! behind each subcommand and report rendering.

pub mod app;
pub mod config;
pub mod output;
pub mod pipeline;

use thiserror::Error;

/// Failures that stop a run before any report exists. Exit code 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(path: impl Into<String>, message: impl std::fmt::Display) -> Self {
        CliError::Config {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
