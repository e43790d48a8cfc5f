//! Lockstep multi-chain HMC.
//!
//! [`hmc_step`] advances every chain of a [`ChainBatch`] by one transition.
//! Chains are processed in blocks of [`BLOCK_WIDTH`] so the target sees
//! several chains per call, and blocks may run on different threads. Block
//! boundaries do not depend on the thread count, so results do not either.

mod adapt;
mod config;
mod driver;
mod leapfrog;
mod step;

pub use adapt::{
    adapt_step_size, estimate_diag_mass, warmup, warmup_phases, AdaptConfig, WarmupOutcome,
    ACCEPT_PROB_FLOOR, MIN_MASS_DRAWS,
};
pub use config::{HmcConfig, JitterScope, SamplerError};
pub use driver::{continue_chains, run_chains, Draw, NullSink, RunKeys, RunSummary, SampleSink, SinkError};
pub use leapfrog::{integrate, kinetic_energy, leapfrog_step, LeapfrogState};
pub use step::{draw_trajectory_length, hmc_step, ChainBatch, StepOutput, BLOCK_WIDTH};
