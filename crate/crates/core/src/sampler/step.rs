use rayon::prelude::*;

use super::leapfrog::{kinetic_term, Tile};
use super::{HmcConfig, JitterScope, SamplerError};
use crate::model::LogDensity;
use crate::{ChainMatrix, RandomKey, Real};

/// Chains evaluated together by one call into the target.
pub const BLOCK_WIDTH: usize = 8;

/// Current states of all chains with their cached log-densities and
/// gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainBatch<T> {
    z: ChainMatrix<T>,
    value: Vec<T>,
    grad: ChainMatrix<T>,
}

impl<T: Real> ChainBatch<T> {
    pub fn new<M: LogDensity<T> + ?Sized>(
        target: &M,
        z: ChainMatrix<T>,
    ) -> Result<Self, SamplerError> {
        if z.chains() == 0 {
            return Err(SamplerError::NoChains);
        }
        if z.dim() != target.dim() {
            return Err(SamplerError::ShapeMismatch {
                expected: (z.chains(), target.dim()),
                found: (z.chains(), z.dim()),
            });
        }
        let chains = z.chains();
        let p = z.dim();
        let blocks: Vec<(Vec<T>, Vec<T>)> = block_starts(chains)
            .into_par_iter()
            .map(|(start, width)| {
                let mut tile = vec![T::zero(); p * width];
                z.gather_block(start, width, &mut tile);
                let mut value = vec![T::zero(); width];
                let mut grad = vec![T::zero(); p * width];
                target.value_and_grad_lanes(&tile, width, &mut value, &mut grad);
                (value, grad)
            })
            .collect();
        let mut batch = ChainBatch {
            value: Vec::with_capacity(chains),
            grad: ChainMatrix::zeros(chains, p),
            z,
        };
        for ((start, width), (value, grad)) in block_starts(chains).into_iter().zip(blocks) {
            batch.value.extend(value);
            batch.grad.scatter_block(start, width, &grad);
        }
        for c in 0..chains {
            let finite = (0..p).all(|i| batch.z.get(c, i).is_finite());
            if !finite || !batch.value[c].is_finite() {
                return Err(SamplerError::NonFiniteInit { chain: c });
            }
        }
        Ok(batch)
    }

    pub fn z(&self) -> &ChainMatrix<T> {
        &self.z
    }

    pub fn value(&self) -> &[T] {
        &self.value
    }

    pub fn grad(&self) -> &ChainMatrix<T> {
        &self.grad
    }

    pub fn chains(&self) -> usize {
        self.z.chains()
    }

    pub fn dim(&self) -> usize {
        self.z.dim()
    }

    pub fn into_z(self) -> ChainMatrix<T> {
        self.z
    }
}

fn block_starts(chains: usize) -> Vec<(usize, usize)> {
    (0..chains)
        .step_by(BLOCK_WIDTH)
        .map(|s| (s, BLOCK_WIDTH.min(chains - s)))
        .collect()
}

/// Result of one lockstep transition.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput<T> {
    pub z: ChainMatrix<T>,
    /// End point of each chain's trajectory, accepted or not.
    pub proposal: ChainMatrix<T>,
    pub is_accepted: Vec<bool>,
    pub log_accept_ratio: Vec<f64>,
    pub num_leapfrog_used: usize,
}

/// Trajectory length for one iteration: uniform on `1..=2L` when
/// jittering, otherwise exactly `L`.
pub fn draw_trajectory_length(jitter_key: RandomKey, num_leapfrog_steps: usize, jitter: bool) -> usize {
    if !jitter {
        return num_leapfrog_steps;
    }
    let max = 1 + 2 * num_leapfrog_steps as i64;
    jitter_key.randint(1, max).expect("L >= 1 gives a nonempty range") as usize
}

fn shared_trajectory_length(
    config: &HmcConfig,
    jitter_key: RandomKey,
    chains: usize,
) -> Result<usize, SamplerError> {
    let draw = |key| draw_trajectory_length(key, config.num_leapfrog_steps, config.jitter);
    let lengths: Vec<usize> = match config.jitter_scope {
        JitterScope::Shared => vec![draw(jitter_key); chains],
        JitterScope::PerChain => (0..chains as u64).map(|c| draw(jitter_key.fold_in(c))).collect(),
    };
    for (c, &n) in lengths.iter().enumerate() {
        if n != lengths[0] {
            return Err(SamplerError::LockstepViolation {
                chain: c,
                expected: lengths[0],
                found: n,
            });
        }
    }
    Ok(lengths[0])
}

struct Prepared<T> {
    step_size: T,
    mass: Option<Vec<T>>,
    momentum_scale: Option<Vec<f64>>,
    stable_ratio: bool,
    steps: usize,
}

struct BlockResult<T> {
    z: Vec<T>,
    proposal: Vec<T>,
    grad: Vec<T>,
    value: Vec<T>,
    accepted: Vec<bool>,
    log_accept_ratio: Vec<f64>,
}

/// One HMC transition for every chain. All chains integrate for the same
/// number of leapfrog steps; each chain draws its momentum and its
/// accept/reject uniform from `step_key.fold_in(chain)`.
pub fn hmc_step<T: Real, M: LogDensity<T> + ?Sized>(
    target: &M,
    config: &HmcConfig,
    batch: &mut ChainBatch<T>,
    step_key: RandomKey,
    jitter_key: RandomKey,
) -> Result<StepOutput<T>, SamplerError> {
    config.validate(batch.dim())?;
    let chains = batch.chains();
    let steps = shared_trajectory_length(config, jitter_key, chains)?;
    let prep = Prepared {
        step_size: T::cast(config.step_size),
        mass: config
            .mass_diag
            .as_ref()
            .map(|m| m.iter().map(|&k| T::cast(k)).collect()),
        momentum_scale: config
            .mass_diag
            .as_ref()
            .map(|m| m.iter().map(|k| k.sqrt()).collect()),
        stable_ratio: config.stable_ratio,
        steps,
    };

    let blocks = block_starts(chains);
    let results: Vec<BlockResult<T>> = {
        let batch = &*batch;
        blocks
            .par_iter()
            .map(|&(start, width)| step_block(target, &prep, batch, start, width, step_key))
            .collect()
    };

    let mut is_accepted = Vec::with_capacity(chains);
    let mut log_accept_ratio = Vec::with_capacity(chains);
    let mut proposal = ChainMatrix::zeros(chains, batch.dim());
    for (&(start, width), r) in blocks.iter().zip(results) {
        proposal.scatter_block(start, width, &r.proposal);
        batch.z.scatter_block(start, width, &r.z);
        batch.grad.scatter_block(start, width, &r.grad);
        batch.value[start..start + width].copy_from_slice(&r.value);
        is_accepted.extend(r.accepted);
        log_accept_ratio.extend(r.log_accept_ratio);
    }
    debug_assert!(batch.value.iter().all(|v| v.is_finite()));
    Ok(StepOutput {
        z: batch.z.clone(),
        proposal,
        is_accepted,
        log_accept_ratio,
        num_leapfrog_used: steps,
    })
}

fn step_block<T: Real, M: LogDensity<T> + ?Sized>(
    target: &M,
    prep: &Prepared<T>,
    batch: &ChainBatch<T>,
    start: usize,
    width: usize,
    step_key: RandomKey,
) -> BlockResult<T> {
    let p = batch.dim();
    let mass = prep.mass.as_deref();
    let mut z0 = vec![T::zero(); p * width];
    let mut g0 = vec![T::zero(); p * width];
    batch.z.gather_block(start, width, &mut z0);
    batch.grad.gather_block(start, width, &mut g0);
    let v0 = batch.value[start..start + width].to_vec();

    let mut m0 = vec![T::zero(); p * width];
    let mut log_u = vec![0.0; width];
    for b in 0..width {
        let keys = step_key.fold_in((start + b) as u64).split(2).expect("two keys");
        let noise = keys[0].normal(p);
        for i in 0..p {
            let scaled = match &prep.momentum_scale {
                Some(s) => noise[i] * s[i],
                None => noise[i],
            };
            m0[i * width + b] = T::cast(scaled);
        }
        log_u[b] = keys[1].uniform_scalar().ln();
    }

    let mut tile = Tile {
        lanes: width,
        z: z0.clone(),
        m: m0.clone(),
        grad: g0.clone(),
        value: v0.clone(),
    };
    for _ in 0..prep.steps {
        tile.leapfrog(target, prep.step_size, mass);
    }

    let proposal = tile.z.clone();
    let half = T::cast(0.5);
    let mut accepted = vec![false; width];
    let mut log_accept_ratio = vec![f64::NEG_INFINITY; width];
    let mut z_old = vec![T::zero(); p];
    let mut z_new = vec![T::zero(); p];
    for b in 0..width {
        let mut finite = tile.value[b].is_finite();
        for i in 0..p {
            z_old[i] = z0[i * width + b];
            z_new[i] = tile.z[i * width + b];
            finite &= z_new[i].is_finite() && tile.m[i * width + b].is_finite();
        }
        let lar = if !finite {
            f64::NEG_INFINITY
        } else if prep.stable_ratio {
            let mut kinetic_diff = T::zero();
            for i in 0..p {
                let k = mass.map(|k| k[i]);
                kinetic_diff = kinetic_diff
                    + (kinetic_term(m0[i * width + b], k) - kinetic_term(tile.m[i * width + b], k));
            }
            (half * kinetic_diff + target.log_prob_ratio(&z_new, &z_old)).widen()
        } else {
            let mut k0 = T::zero();
            let mut k1 = T::zero();
            for i in 0..p {
                let k = mass.map(|k| k[i]);
                k0 = k0 + kinetic_term(m0[i * width + b], k);
                k1 = k1 + kinetic_term(tile.m[i * width + b], k);
            }
            let energy = half * k0 - v0[b];
            let new_energy = half * k1 - tile.value[b];
            (energy - new_energy).widen()
        };
        let lar = if lar.is_nan() { f64::NEG_INFINITY } else { lar };
        log_accept_ratio[b] = lar;
        accepted[b] = log_u[b] < lar;
        if !accepted[b] {
            for i in 0..p {
                tile.z[i * width + b] = z0[i * width + b];
                tile.grad[i * width + b] = g0[i * width + b];
            }
            tile.value[b] = v0[b];
        }
    }

    BlockResult {
        z: tile.z,
        proposal,
        grad: tile.grad,
        value: tile.value,
        accepted,
        log_accept_ratio,
    }
}
