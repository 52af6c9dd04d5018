//! Command line front end: configuration loading, experiment orchestration
//! and the on-disk output tree.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod heatmap;
pub mod output;

use std::path::PathBuf;

pub use config::{ConfigFile, Settings};

/// Process exit status for usage and configuration errors.
pub const EXIT_USAGE: u8 = 2;
/// Process exit status for failures while running or writing results.
pub const EXIT_RUNTIME: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] aquafel_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } | CliError::Usage(_) => EXIT_USAGE,
            CliError::Io { .. } => EXIT_RUNTIME,
            CliError::Core(e) if is_config(e) => EXIT_USAGE,
            CliError::Core(_) => EXIT_RUNTIME,
        }
    }
}

fn is_config(e: &aquafel_core::Error) -> bool {
    match e {
        aquafel_core::Error::Config(_) | aquafel_core::Error::MapParse { .. } => true,
        aquafel_core::Error::Mission { source, .. } => is_config(source),
        _ => false,
    }
}
