//! Experiment harness around `lockstep-hmc`: sampling runs with
//! diagnostics, chain-count throughput sweeps, gradient checks and the
//! single-precision roundoff demonstration.
//!
//! The binary is a thin clap layer over the functions here, so tests can
//! drive the same code paths without spawning processes.

pub mod commands;
pub mod config;
pub mod models;
pub mod output;

use thiserror::Error;

pub use config::{ModelSpec, Retention, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or arguments. Exit status 2.
    #[error("{0}")]
    Usage(String),
    /// A check ran and did not pass. Exit status 1.
    #[error("{0}")]
    CheckFailed(String),
    #[error(transparent)]
    Other(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::CheckFailed(_) | CliError::Other(_) => 1,
        }
    }
}

/// Runs `f` on a dedicated pool of `threads` workers, or on the global
/// pool when `threads` is `None`.
pub fn with_threads<R: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> R + Send,
) -> Result<R, CliError> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Other(e.into()))?;
            Ok(pool.install(f))
        }
    }
}
