//! Convergence and efficiency diagnostics, always computed in double
//! precision.

mod acceptance;
mod convergence;
mod jumps;
mod moments;
mod report;

pub use acceptance::{accept_prob, harmonic_mean_acceptance, is_suspicious, roundoff_suspicion};
pub use convergence::{ess, ess_estimate, split_rhat, streaming_split_rhat, EssEstimate};
pub use jumps::{chees, esjd, RunningMean};
pub use moments::StreamingMoments;
pub use report::{DiagnosticsReport, MomentsRecorder, Recorder, TraceRecorder};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("shape {found:?} does not match {expected:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("trace of length {len} cannot be split into {chains} chains")]
    RaggedTrace { len: usize, chains: usize },
    #[error("need at least {needed} draws per chain, got {found}")]
    TooFewDraws { needed: usize, found: usize },
    #[error("degenerate trace: within-chain variance is zero")]
    DegenerateTrace,
    #[error("no values")]
    Empty,
    #[error("acceptance probability {0} is outside (0, 1]")]
    InvalidProbability(f64),
}
