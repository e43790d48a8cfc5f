mod bench;
mod gradcheck;
mod precision;
mod sample;

pub use bench::{bench_chains, default_chain_list, BenchConfig};
pub use gradcheck::{grad_check, GradCheckReport, GRAD_CHECK_STATES, GRAD_CHECK_TOLERANCE};
pub use precision::{precision_demo, PrecisionDemoConfig, PrecisionDemoReport, PathReport};
pub use sample::{sample, sample_summary, write_sample_artifacts, SampleOutcome};

use lockstep_hmc::sampler::SamplerError;

use crate::CliError;

pub(crate) fn sampler_error(e: SamplerError) -> CliError {
    match e {
        SamplerError::InvalidConfig(msg) => CliError::Usage(msg),
        other => CliError::Other(other.into()),
    }
}

/// Three independent streams derived from the root seed: initial states,
/// warmup, and the retained draws.
pub(crate) fn run_keys(seed: u64) -> [lockstep_hmc::RandomKey; 3] {
    lockstep_hmc::RandomKey::from_seed(seed)
        .split(3)
        .expect("three keys")
        .try_into()
        .expect("three keys")
}
