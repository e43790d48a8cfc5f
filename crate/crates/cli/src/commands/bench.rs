use std::time::Instant;

use lockstep_hmc::sampler::{continue_chains, ChainBatch, HmcConfig, NullSink};
use lockstep_hmc::{ChainMatrix, Precision, Real};

use super::{run_keys, sampler_error};
use crate::config::RunConfig;
use crate::models::{load_model, uniform_init, LoadedModel};
use crate::output::BenchRow;
use crate::{with_threads, CliError};

#[derive(Debug, Clone)]
pub struct BenchConfig {
    /// Model, step size, trajectory length, precision, seed and threads.
    /// `run.draws` is the number of timed transitions per chain count.
    pub run: RunConfig,
    pub chain_list: Vec<usize>,
    /// Timed repetitions per chain count; the fastest is kept.
    pub repeats: usize,
}

pub fn default_chain_list() -> Vec<usize> {
    (0..=8).map(|k| 1 << k).collect()
}

/// Times a fixed number of transitions at each chain count. A chain count
/// that cannot be allocated yields a row with empty timings and the sweep
/// moves on.
pub fn bench_chains(cfg: &BenchConfig) -> Result<Vec<BenchRow>, CliError> {
    cfg.run.validate()?;
    if cfg.chain_list.is_empty() {
        return Err(CliError::Usage("chain list is empty".into()));
    }
    if cfg.chain_list.contains(&0) {
        return Err(CliError::Usage("chain counts must be at least 1".into()));
    }
    if cfg.chain_list.windows(2).any(|w| w[1] < w[0]) {
        return Err(CliError::Usage("chain list must be nondecreasing".into()));
    }
    if cfg.repeats == 0 {
        return Err(CliError::Usage("--repeats must be at least 1".into()));
    }
    with_threads(cfg.run.threads, || match cfg.run.precision {
        Precision::Single => bench_in::<f32>(cfg),
        Precision::Double => bench_in::<f64>(cfg),
    })?
}

fn bench_in<T: Real>(cfg: &BenchConfig) -> Result<Vec<BenchRow>, CliError> {
    let model = load_model::<T>(&cfg.run.model, cfg.run.data_seed)?;
    let hmc = HmcConfig::new(cfg.run.step_size, cfg.run.leapfrog_steps)
        .with_jitter(cfg.run.jitter)
        .with_stable_ratio(cfg.run.stable_ratio);
    let mut rows = Vec::with_capacity(cfg.chain_list.len());
    for &chains in &cfg.chain_list {
        let wall = match time_chains(&model, &hmc, cfg, chains) {
            Ok(w) => Some(w),
            Err(BenchFailure::OutOfMemory) => {
                eprintln!("chains={chains}: out of memory, skipping");
                None
            }
            Err(BenchFailure::Fatal(e)) => return Err(e),
        };
        let total = (chains * cfg.run.draws) as f64;
        rows.push(BenchRow {
            chains,
            wall_seconds: wall,
            draws_per_second: wall.map(|w| total / w.max(f64::MIN_POSITIVE)),
        });
    }
    Ok(rows)
}

enum BenchFailure {
    OutOfMemory,
    Fatal(CliError),
}

/// Working buffers per chain and dimension during a transition: state,
/// gradient, proposal and the block tiles, with room to spare.
const BUFFERS_PER_CELL: usize = 12;

fn time_chains<T: Real>(
    model: &LoadedModel<T>,
    hmc: &HmcConfig,
    cfg: &BenchConfig,
    chains: usize,
) -> Result<f64, BenchFailure> {
    let dim = model.dim();
    let cells = chains
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(BUFFERS_PER_CELL))
        .ok_or(BenchFailure::OutOfMemory)?;
    let mut probe: Vec<T> = Vec::new();
    probe.try_reserve_exact(cells).map_err(|_| BenchFailure::OutOfMemory)?;
    drop(probe);
    ChainMatrix::<T>::try_zeros(chains, dim).ok_or(BenchFailure::OutOfMemory)?;

    let [init_key, warmup_key, draw_key] = run_keys(cfg.run.seed);
    let z0 = uniform_init::<T>(init_key, chains, dim, cfg.run.init_radius);
    let target = &*model.target;
    let fatal = |e| BenchFailure::Fatal(sampler_error(e));
    let batch = ChainBatch::new(target, z0).map_err(fatal)?;
    let mut batch = continue_chains(target, hmc, batch, warmup_key, 1, &mut NullSink)
        .map_err(fatal)?
        .batch;

    let mut best = f64::INFINITY;
    for r in 0..cfg.repeats {
        let start = Instant::now();
        let out = continue_chains(target, hmc, batch, draw_key.child(r as u64), cfg.run.draws, &mut NullSink)
            .map_err(fatal)?;
        best = best.min(start.elapsed().as_secs_f64());
        batch = out.batch;
    }
    Ok(best)
}
