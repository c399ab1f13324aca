//! Runner for `pdnr-core`: configuration, presets, parallel drivers, output
//! files and the `pdnr` command-line tool.

pub mod commands;
pub mod config;
pub mod formats;
pub mod parallel;
pub mod presets;
pub mod schedule;

use std::path::PathBuf;

pub use commands::{simulate, Series};
pub use config::{Instant, Method, RunConfig};
pub use schedule::Schedule;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config key '{key}': {message}")]
    Config { key: String, message: String },

    #[error("unknown preset '{name}' (available: {available})")]
    UnknownPreset { name: String, available: String },

    #[error("instant: {0}")]
    Instant(String),

    #[error("{0}")]
    Format(String),

    #[error("{0}")]
    Unsupported(String),

    #[error(transparent)]
    Core(#[from] pdnr_core::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}
