use std::error::Error as StdError;

use super::{hmc_step, ChainBatch, HmcConfig, SamplerError, StepOutput};
use crate::model::LogDensity;
use crate::{ChainMatrix, RandomKey, Real};

pub type SinkError = Box<dyn StdError + Send + Sync>;

/// One transition as seen by a sink: the states before it and its output.
#[derive(Debug, Clone, Copy)]
pub struct Draw<'a, T> {
    pub index: usize,
    pub prev: &'a ChainMatrix<T>,
    pub output: &'a StepOutput<T>,
}

impl<T> Draw<'_, T> {
    pub fn state(&self) -> &ChainMatrix<T> {
        &self.output.z
    }
}

/// Receives every transition of a run, in order, from a single thread.
pub trait SampleSink<T> {
    fn record(&mut self, draw: &Draw<'_, T>) -> Result<(), SinkError>;
}

impl<T, F> SampleSink<T> for F
where
    F: FnMut(&Draw<'_, T>) -> Result<(), SinkError>,
{
    fn record(&mut self, draw: &Draw<'_, T>) -> Result<(), SinkError> {
        self(draw)
    }
}

/// Discards everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl<T> SampleSink<T> for NullSink {
    fn record(&mut self, _: &Draw<'_, T>) -> Result<(), SinkError> {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary<T> {
    pub num_steps: usize,
    pub accepted: Vec<u64>,
    pub batch: ChainBatch<T>,
}

impl<T> RunSummary<T> {
    pub fn acceptance_rate(&self) -> f64 {
        if self.num_steps == 0 {
            return 0.0;
        }
        let total: u64 = self.accepted.iter().sum();
        total as f64 / (self.num_steps * self.accepted.len()) as f64
    }
}

/// Per-step keys of a run: step `t` uses `step_root.child(t)` for the
/// chains and `jitter_root.child(t)` for the shared trajectory length.
#[derive(Debug, Clone, Copy)]
pub struct RunKeys {
    step_root: RandomKey,
    jitter_root: RandomKey,
}

impl RunKeys {
    pub fn new(root: RandomKey) -> Self {
        let keys = root.split(2).expect("two keys");
        RunKeys {
            step_root: keys[0],
            jitter_root: keys[1],
        }
    }

    pub fn step(&self, t: usize) -> (RandomKey, RandomKey) {
        (self.step_root.child(t as u64), self.jitter_root.child(t as u64))
    }
}

/// Runs `num_steps` lockstep transitions from `z_init`, streaming each
/// into `sink`.
pub fn run_chains<T: Real, M: LogDensity<T> + ?Sized>(
    target: &M,
    config: &HmcConfig,
    z_init: ChainMatrix<T>,
    root_key: RandomKey,
    num_steps: usize,
    sink: &mut dyn SampleSink<T>,
) -> Result<RunSummary<T>, SamplerError> {
    config.validate(target.dim())?;
    let batch = ChainBatch::new(target, z_init)?;
    continue_chains(target, config, batch, root_key, num_steps, sink)
}

/// As [`run_chains`], starting from an already evaluated batch.
pub fn continue_chains<T: Real, M: LogDensity<T> + ?Sized>(
    target: &M,
    config: &HmcConfig,
    mut batch: ChainBatch<T>,
    root_key: RandomKey,
    num_steps: usize,
    sink: &mut dyn SampleSink<T>,
) -> Result<RunSummary<T>, SamplerError> {
    config.validate(target.dim())?;
    let keys = RunKeys::new(root_key);
    let mut accepted = vec![0u64; batch.chains()];
    for t in 0..num_steps {
        let prev = batch.z().clone();
        let (step_key, jitter_key) = keys.step(t);
        let output = hmc_step(target, config, &mut batch, step_key, jitter_key)?;
        for (a, &ok) in accepted.iter_mut().zip(&output.is_accepted) {
            *a += ok as u64;
        }
        sink.record(&Draw {
            index: t,
            prev: &prev,
            output: &output,
        })
        .map_err(SamplerError::Sink)?;
    }
    Ok(RunSummary {
        num_steps,
        accepted,
        batch,
    })
}
