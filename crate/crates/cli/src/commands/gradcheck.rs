use lockstep_hmc::gradients::{finite_difference_check, DEFAULT_STEP};
use lockstep_hmc::Precision;
use serde::Serialize;

use super::run_keys;
use crate::config::RunConfig;
use crate::models::{load_model, uniform_init};
use crate::CliError;

pub const GRAD_CHECK_STATES: usize = 20;
pub const GRAD_CHECK_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub model: String,
    pub states: usize,
    pub step: f64,
    /// Worst relative error per state.
    pub errors: Vec<f64>,
    pub max_error: f64,
    pub passed: bool,
}

/// Compares analytic gradients with central differences at
/// [`GRAD_CHECK_STATES`] states drawn like sampler initial states.
pub fn grad_check(cfg: &RunConfig) -> Result<GradCheckReport, CliError> {
    if cfg.precision == Precision::Single {
        return Err(CliError::Usage(
            "grad-check needs --precision double: single-precision rounding swamps central differences".into(),
        ));
    }
    if !(cfg.init_radius >= 0.0 && cfg.init_radius.is_finite()) {
        return Err(CliError::Usage(format!(
            "--init-radius must be non-negative, got {}",
            cfg.init_radius
        )));
    }
    let model = load_model::<f64>(&cfg.model, cfg.data_seed)?;
    let [init_key, _, _] = run_keys(cfg.seed);
    let states = uniform_init::<f64>(init_key, GRAD_CHECK_STATES, model.dim(), cfg.init_radius);
    let mut errors = Vec::with_capacity(GRAD_CHECK_STATES);
    for c in 0..GRAD_CHECK_STATES {
        let z = states.row(c);
        let err = finite_difference_check(&*model.target, &z, DEFAULT_STEP)
            .map_err(|e| CliError::Other(e.into()))?;
        errors.push(err);
    }
    let max_error = if errors.iter().any(|e| e.is_nan()) {
        f64::NAN
    } else {
        errors.iter().copied().fold(0.0, f64::max)
    };
    Ok(GradCheckReport {
        model: cfg.model.to_string(),
        states: GRAD_CHECK_STATES,
        step: DEFAULT_STEP,
        errors,
        max_error,
        passed: max_error < GRAD_CHECK_TOLERANCE,
    })
}
