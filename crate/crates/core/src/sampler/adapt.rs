use super::{hmc_step, ChainBatch, HmcConfig, RunKeys, SamplerError};
use crate::diagnostics::{accept_prob, harmonic_mean_acceptance, StreamingMoments};
use crate::model::LogDensity;
use crate::{ChainMatrix, RandomKey, Real};

/// Minimum draws per chain before a mass matrix is estimated.
pub const MIN_MASS_DRAWS: u64 = 10;
const VARIANCE_FLOOR: f64 = 1e-8;
/// Acceptance probabilities are floored here before averaging, so one
/// chain with a divergent proposal cannot produce a zero harmonic mean.
pub const ACCEPT_PROB_FLOOR: f64 = 1e-10;

/// Diagonal mass `1 / variance` from pooled warmup moments.
pub fn estimate_diag_mass(moments: &StreamingMoments) -> Result<Vec<f64>, SamplerError> {
    if moments.count() < MIN_MASS_DRAWS {
        return Err(SamplerError::InsufficientMoments {
            needed: MIN_MASS_DRAWS,
            found: moments.count(),
        });
    }
    let var = moments.pooled_variance().expect("count checked above");
    Ok(var.into_iter().map(|v| 1.0 / v.max(VARIANCE_FLOOR)).collect())
}

/// `eps * exp(learning_rate * (hmean(accept_probs) - target_accept))`.
pub fn adapt_step_size(
    step_size: f64,
    accept_probs: &[f64],
    target_accept: f64,
    learning_rate: f64,
) -> Result<f64, SamplerError> {
    let mean = harmonic_mean_acceptance(accept_probs)?;
    let next = step_size * (learning_rate * (mean - target_accept)).exp();
    Ok(next.max(f64::MIN_POSITIVE))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptConfig {
    pub target_accept: f64,
    pub learning_rate: f64,
    pub adapt_mass: bool,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        AdaptConfig {
            target_accept: 0.8,
            learning_rate: 0.05,
            adapt_mass: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct WarmupOutcome<T> {
    pub config: HmcConfig,
    pub batch: ChainBatch<T>,
    /// Step size in force at each warmup iteration.
    pub step_sizes: Vec<f64>,
}

/// Lengths of the three warmup phases: step size alone, mass collection,
/// step size again under the new mass.
pub fn warmup_phases(num_steps: usize) -> [usize; 3] {
    let edge = (num_steps as f64 * 0.15).round() as usize;
    let edge = edge.min(num_steps / 2);
    [edge, num_steps - 2 * edge, edge]
}

/// Adaptive warmup. Phase one tunes the step size with the starting mass,
/// phase two holds it fixed and collects moments for a diagonal mass, and
/// phase three retunes the step size under that mass. When the middle
/// phase is too short to estimate a mass, or mass adaptation is off, the
/// step size is tuned throughout.
pub fn warmup<T: Real, M: LogDensity<T> + ?Sized>(
    target: &M,
    config: &HmcConfig,
    z_init: ChainMatrix<T>,
    root_key: RandomKey,
    num_steps: usize,
    adapt: &AdaptConfig,
) -> Result<WarmupOutcome<T>, SamplerError> {
    config.validate(target.dim())?;
    let mut config = config.clone();
    let mut batch = ChainBatch::new(target, z_init)?;
    let keys = RunKeys::new(root_key);
    let [first, middle, _] = warmup_phases(num_steps);
    let collect_mass = adapt.adapt_mass && middle as u64 >= MIN_MASS_DRAWS;
    let mut moments = StreamingMoments::new(batch.chains(), batch.dim());
    let mut step_sizes = Vec::with_capacity(num_steps);
    let mut probs = vec![0.0; batch.chains()];

    for t in 0..num_steps {
        let in_middle = (first..first + middle).contains(&t);
        step_sizes.push(config.step_size);
        let (step_key, jitter_key) = keys.step(t);
        let out = hmc_step(target, &config, &mut batch, step_key, jitter_key)?;
        if collect_mass && in_middle {
            moments.update(batch.z())?;
            if t + 1 == first + middle {
                config.mass_diag = Some(estimate_diag_mass(&moments)?);
            }
        } else {
            for (p, &lar) in probs.iter_mut().zip(&out.log_accept_ratio) {
                *p = accept_prob(lar, ACCEPT_PROB_FLOOR);
            }
            config.step_size = adapt_step_size(
                config.step_size,
                &probs,
                adapt.target_accept,
                adapt.learning_rate,
            )?;
        }
    }
    Ok(WarmupOutcome {
        config,
        batch,
        step_sizes,
    })
}
