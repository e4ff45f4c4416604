//! Configuration, orchestration and reports for worldsheet verification runs.

pub mod config;
pub mod report;
pub mod suite;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config at {path}: {message}")]
    Config { path: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Engine(String),
}

impl CliError {
    /// Machine-readable form written to stderr on failure.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            CliError::Config { path, message } => {
                serde_json::json!({"error": "config", "field": path, "message": message})
            }
            CliError::Io { path, source } => serde_json::json!({"error": "io", "path": path, "message": source.to_string()}),
            CliError::Engine(m) => serde_json::json!({"error": "engine", "message": m}),
        }
    }
}
