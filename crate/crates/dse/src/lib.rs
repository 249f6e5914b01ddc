//! Runs the policy-gradient engine and the GA baseline from JSON experiment configs,
//! drives external evaluators over a line-delimited JSON protocol, and
//! writes per-seed traces, summaries, checkpoints and aggregates.

pub mod commands;
pub mod config;
pub mod evaluator;
pub mod io;
pub mod presets;

use std::process::ExitCode;

/// Failure of a subcommand, split by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Invalid configuration or arguments (exit code 2).
    #[error("configuration error: {0:#}")]
    Config(anyhow::Error),
    /// The run started but failed (exit code 1). Partial artifacts are kept.
    #[error("run failed: {0:#}")]
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn config(msg: impl std::fmt::Display) -> Self {
        CliError::Config(anyhow::anyhow!("{msg}"))
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(2),
            CliError::Runtime(_) => ExitCode::from(1),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
