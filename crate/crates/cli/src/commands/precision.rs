//! Single-precision roundoff demonstration: on a dataset replicated until
//! |log p| passes 2^24, energy differences computed from absolute log
//! densities are quantized to whole units while the increment-form ratio
//! keeps its fractional bits.

use anyhow::{anyhow, Context};
use lockstep_hmc::diagnostics::roundoff_suspicion;
use lockstep_hmc::model::{Dataset, LogDensity, SparseLogisticRegression};
use lockstep_hmc::sampler::{continue_chains, warmup, AdaptConfig, ChainBatch, Draw, HmcConfig, SinkError};
use lockstep_hmc::ChainMatrix;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_keys, sampler_error};
use crate::config::ModelSpec;
use crate::models::load_dataset;
use crate::{with_threads, CliError};

/// Single precision resolves integers exactly only up to this magnitude.
pub const SINGLE_PRECISION_INTEGER_LIMIT: f64 = 16_777_216.0;

/// Automatic replication aims for this multiple of the limit.
const AUTO_MARGIN: f64 = 2.0;

#[derive(Debug, Clone)]
pub struct PrecisionDemoConfig {
    pub model: ModelSpec,
    /// `None` picks the smallest factor that clears the limit with margin.
    pub replication: Option<usize>,
    pub chains: usize,
    pub warmup: usize,
    pub draws: usize,
    pub leapfrog_steps: usize,
    pub seed: u64,
    pub data_seed: u64,
    pub threads: Option<usize>,
}

impl Default for PrecisionDemoConfig {
    fn default() -> Self {
        PrecisionDemoConfig {
            model: ModelSpec::Synthetic {
                n: 20_000,
                d: 4,
                sparsity: 0.5,
            },
            replication: None,
            chains: 16,
            warmup: 200,
            draws: 200,
            leapfrog_steps: 8,
            seed: 0,
            data_seed: 0,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathReport {
    pub stable_ratio: bool,
    pub acceptance_rate: f64,
    pub roundoff_flag_fraction: f64,
    /// Proposals with a finite end point, over which the errors are taken.
    pub proposals: usize,
    /// Largest |single-precision log-density difference − double oracle|
    /// over this path's (current, proposed) pairs.
    pub max_abs_error: f64,
    pub mean_abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionDemoReport {
    pub model: String,
    pub replication: usize,
    /// |log p| in double precision at the starting point.
    pub log_density_magnitude: f64,
    pub threshold: f64,
    pub warning: Option<String>,
    pub step_size: f64,
    pub naive: PathReport,
    pub stable: PathReport,
}

pub fn precision_demo(cfg: &PrecisionDemoConfig) -> Result<PrecisionDemoReport, CliError> {
    if cfg.chains == 0 || cfg.draws == 0 || cfg.leapfrog_steps == 0 {
        return Err(CliError::Usage(
            "--chains, --draws and --leapfrog-steps must be at least 1".into(),
        ));
    }
    if cfg.replication == Some(0) {
        return Err(CliError::Usage("--replication must be at least 1".into()));
    }
    let data = load_dataset(&cfg.model, cfg.data_seed)?.ok_or_else(|| {
        CliError::Usage("precision-demo needs a data-backed model (synthetic or german-credit)".into())
    })?;
    with_threads(cfg.threads, || run_demo(cfg, &data))?
}

fn run_demo(cfg: &PrecisionDemoConfig, data: &Dataset) -> Result<PrecisionDemoReport, CliError> {
    let d = data.d();
    let (w1, _) = map_coefficients(data, 1.0)?;
    let base = log_likelihood(data, &w1).abs();
    let replication = match cfg.replication {
        Some(k) => k,
        None => (AUTO_MARGIN * SINGLE_PRECISION_INTEGER_LIMIT / base.max(f64::MIN_POSITIVE))
            .ceil()
            .max(1.0) as usize,
    };
    let k = replication as f64;
    let (w, h) = map_coefficients(data, k)?;

    let exact = SparseLogisticRegression::<f64>::new(data)
        .with_replication(replication)
        .context("building model")?;
    let single = SparseLogisticRegression::<f32>::new(data)
        .with_replication(replication)
        .context("building model")?;

    // Unit scales put the start at beta = w, the penalized mode in w.
    let mut z_mode = vec![0.0; 1 + 2 * d];
    z_mode[1 + d..].copy_from_slice(w.as_slice());
    let magnitude = exact.log_prob(&z_mode).abs();
    let warning = (magnitude <= SINGLE_PRECISION_INTEGER_LIMIT).then(|| {
        format!(
            "replication {replication} leaves |log p| = {magnitude:.3e} below 2^24; single precision will not quantize"
        )
    });
    if let Some(msg) = &warning {
        eprintln!("warning: {msg}");
    }

    // Curvature of -log p along each coordinate at the start, used as the
    // diagonal mass and to size the initial spread.
    let hw = &h * &w;
    let mut curvature = vec![0.0; 1 + 2 * d];
    curvature[0] = w.dot(&hw) + 0.5;
    for j in 0..d {
        curvature[1 + j] = w[j] * w[j] * h[(j, j)] + 0.5;
        curvature[1 + d + j] = h[(j, j)];
    }

    let [init_key, warmup_key, draw_key] = run_keys(cfg.seed);
    let noise = init_key.normal(cfg.chains * z_mode.len());
    let mut z0 = ChainMatrix::<f32>::zeros(cfg.chains, z_mode.len());
    for c in 0..cfg.chains {
        for (i, (&m, &s)) in z_mode.iter().zip(&curvature).enumerate() {
            let e = noise[c * z_mode.len() + i];
            z0.set(c, i, (m + 0.1 * e / s.sqrt()) as f32);
        }
    }

    let hmc = HmcConfig::new(0.5, cfg.leapfrog_steps)
        .with_jitter(true)
        .with_mass(curvature)
        .with_stable_ratio(true);
    let adapt = AdaptConfig {
        adapt_mass: false,
        ..AdaptConfig::default()
    };
    let warmed = warmup(&single, &hmc, z0, warmup_key, cfg.warmup, &adapt).map_err(sampler_error)?;

    let mut paths = Vec::with_capacity(2);
    for stable in [false, true] {
        let config = warmed.config.clone().with_stable_ratio(stable);
        paths.push(run_path(&single, &exact, &config, warmed.batch.clone(), draw_key, cfg.draws)?);
    }
    let stable = paths.pop().expect("two paths");
    let naive = paths.pop().expect("two paths");
    Ok(PrecisionDemoReport {
        model: cfg.model.to_string(),
        replication,
        log_density_magnitude: magnitude,
        threshold: SINGLE_PRECISION_INTEGER_LIMIT,
        warning,
        step_size: warmed.config.step_size,
        naive,
        stable,
    })
}

fn run_path(
    single: &SparseLogisticRegression<f32>,
    exact: &SparseLogisticRegression<f64>,
    config: &HmcConfig,
    batch: ChainBatch<f32>,
    key: lockstep_hmc::RandomKey,
    draws: usize,
) -> Result<PathReport, CliError> {
    let mut pairs: Vec<(Vec<f32>, Vec<f32>)> = Vec::new();
    let mut ratios: Vec<f64> = Vec::new();
    let mut sink = |draw: &Draw<'_, f32>| -> Result<(), SinkError> {
        ratios.extend_from_slice(&draw.output.log_accept_ratio);
        for c in 0..draw.prev.chains() {
            let proposal = draw.output.proposal.row(c);
            if proposal.iter().all(|v| v.is_finite()) {
                pairs.push((draw.prev.row(c), proposal));
            }
        }
        Ok(())
    };
    let summary = continue_chains(single, config, batch, key, draws, &mut sink).map_err(sampler_error)?;

    let errors: Vec<f64> = pairs
        .par_iter()
        .map(|(old, new)| {
            let wide = |v: &[f32]| v.iter().map(|&x| x as f64).collect::<Vec<f64>>();
            let oracle = exact.log_prob_ratio(&wide(new), &wide(old));
            let single_diff = if config.stable_ratio {
                single.log_prob_ratio(new, old) as f64
            } else {
                (single.log_prob(new) - single.log_prob(old)) as f64
            };
            (single_diff - oracle).abs()
        })
        .collect();
    let max_abs_error = if errors.iter().any(|e| e.is_nan()) {
        f64::NAN
    } else {
        errors.iter().copied().fold(0.0, f64::max)
    };
    let mean_abs_error = if errors.is_empty() {
        f64::NAN
    } else {
        errors.iter().sum::<f64>() / errors.len() as f64
    };
    Ok(PathReport {
        stable_ratio: config.stable_ratio,
        acceptance_rate: summary.acceptance_rate(),
        roundoff_flag_fraction: roundoff_suspicion(&ratios).map_err(|e| CliError::Other(e.into()))?,
        proposals: errors.len(),
        max_abs_error,
        mean_abs_error,
    })
}

fn log_likelihood(data: &Dataset, w: &DVector<f64>) -> f64 {
    (0..data.n())
        .map(|i| {
            let t: f64 = data.row(i).iter().zip(w.iter()).map(|(x, w)| x * w).sum();
            let y = data.y()[i] as f64;
            y * t - (t.max(0.0) + (-t.abs()).exp().ln_1p())
        })
        .sum()
}

/// Newton iterations for the maximizer of `k * loglik(w) - |w|^2 / 2`.
/// Returns the maximizer and the negative Hessian there.
fn map_coefficients(data: &Dataset, k: f64) -> Result<(DVector<f64>, DMatrix<f64>), CliError> {
    let d = data.d();
    let mut w = DVector::<f64>::zeros(d);
    for _ in 0..200 {
        let mut grad = -w.clone();
        let mut hess = DMatrix::<f64>::identity(d, d);
        for i in 0..data.n() {
            let x = DVector::from_column_slice(data.row(i));
            let t = x.dot(&w);
            let p = 1.0 / (1.0 + (-t).exp());
            grad.axpy(k * (data.y()[i] as f64 - p), &x, 1.0);
            hess.ger(k * p * (1.0 - p), &x, &x, 1.0);
        }
        let step = hess
            .clone()
            .cholesky()
            .ok_or_else(|| anyhow!("Hessian is not positive definite"))?
            .solve(&grad);
        w += &step;
        if step.norm() <= 1e-12 * (1.0 + w.norm()) {
            return Ok((w, hess));
        }
    }
    Err(CliError::Other(anyhow!("mode search did not converge")))
}
