use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use anyhow::Context;
use lockstep_hmc::diagnostics::{MomentsRecorder, TraceRecorder};
use lockstep_hmc::sampler::{continue_chains, run_chains, warmup, AdaptConfig, HmcConfig, NullSink};
use lockstep_hmc::{Precision, Real};

use super::{run_keys, sampler_error};
use crate::config::{Retention, RunConfig};
use crate::models::{load_model, uniform_init};
use crate::output::{write_json, SampleReport, TraceTable};
use crate::{with_threads, CliError};

pub struct SampleOutcome {
    pub report: SampleReport,
    /// Present when every draw was retained.
    pub trace: Option<TraceTable>,
}

/// Warmup followed by `cfg.draws` recorded transitions.
pub fn sample(cfg: &RunConfig) -> Result<SampleOutcome, CliError> {
    cfg.validate()?;
    with_threads(cfg.threads, || match cfg.precision {
        Precision::Single => sample_in::<f32>(cfg),
        Precision::Double => sample_in::<f64>(cfg),
    })?
}

fn sample_in<T: Real>(cfg: &RunConfig) -> Result<SampleOutcome, CliError> {
    let model = load_model::<T>(&cfg.model, cfg.data_seed)?;
    let target = &*model.target;
    let dim = model.dim();
    let [init_key, warmup_key, draw_key] = run_keys(cfg.seed);
    let z0 = uniform_init::<T>(init_key, cfg.chains, dim, cfg.init_radius);
    let hmc = HmcConfig::new(cfg.step_size, cfg.leapfrog_steps)
        .with_jitter(cfg.jitter)
        .with_stable_ratio(cfg.stable_ratio);

    let (hmc, batch) = if cfg.adapt {
        let out = warmup(target, &hmc, z0, warmup_key, cfg.warmup, &AdaptConfig::default())
            .map_err(sampler_error)?;
        (out.config, out.batch)
    } else {
        let out = run_chains(target, &hmc, z0, warmup_key, cfg.warmup, &mut NullSink)
            .map_err(sampler_error)?;
        (hmc, out.batch)
    };

    let start = Instant::now();
    let (summary, diagnostics, trace) = match cfg.retention {
        Retention::Full => {
            let mut rec = TraceRecorder::with_capacity(cfg.chains, dim, cfg.draws)
                .map_err(|e| anyhow::anyhow!("cannot hold the full trace in memory: {e}"))?
                .with_tau_index(model.tau_index);
            let summary = continue_chains(target, &hmc, batch, draw_key, cfg.draws, &mut rec)
                .map_err(sampler_error)?;
            let table = TraceTable::from_recorder(&rec, &model.param_names);
            (summary, rec.report(), Some(table))
        }
        Retention::MomentsOnly => {
            let mut rec = MomentsRecorder::new(cfg.chains, dim, cfg.draws);
            let summary = continue_chains(target, &hmc, batch, draw_key, cfg.draws, &mut rec)
                .map_err(sampler_error)?;
            (summary, rec.report(), None)
        }
    };
    let wall_seconds = start.elapsed().as_secs_f64();
    let total = (cfg.draws * cfg.chains) as f64;

    let report = SampleReport {
        model: cfg.model.to_string(),
        precision: T::PRECISION.as_str().to_string(),
        seed: cfg.seed,
        data_seed: cfg.data_seed,
        warmup: cfg.warmup,
        leapfrog_steps: cfg.leapfrog_steps,
        jitter: cfg.jitter,
        stable_ratio: cfg.stable_ratio,
        adapt: cfg.adapt,
        retention: match cfg.retention {
            Retention::Full => "full",
            Retention::MomentsOnly => "moments-only",
        }
        .to_string(),
        step_size: hmc.step_size,
        mass_diag: hmc.mass_diag.clone(),
        param_names: model.param_names.clone(),
        acceptance_rate: summary.acceptance_rate(),
        wall_seconds,
        draws_per_second: if wall_seconds > 0.0 { total / wall_seconds } else { 0.0 },
        diagnostics,
    };
    Ok(SampleOutcome { report, trace })
}

/// Writes `report.json`, and `trace.csv` when the trace was kept, into
/// `dir`.
pub fn write_sample_artifacts(outcome: &SampleOutcome, dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    if let Some(trace) = &outcome.trace {
        trace.write_file(&dir.join("trace.csv"))?;
    }
    write_json(&outcome.report, &dir.join("report.json"))?;
    Ok(())
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.digits$}"))
}

pub fn sample_summary(report: &SampleReport) -> String {
    let d = &report.diagnostics;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{} ({}), {} chains x {} draws",
        report.model, report.precision, d.num_chains, d.num_draws
    );
    let _ = writeln!(
        s,
        "step size {:.4e}, {} leapfrog steps{}",
        report.step_size,
        report.leapfrog_steps,
        if report.jitter { " (jittered)" } else { "" }
    );
    let rhats: Vec<f64> = d.rhat.iter().flatten().copied().collect();
    let rmin = rhats.iter().copied().reduce(f64::min);
    let rmax = rhats.iter().copied().reduce(f64::max);
    let _ = writeln!(s, "split R-hat    {} .. {}", fmt_opt(rmin, 4), fmt_opt(rmax, 4));
    if let Some(ess) = &d.ess {
        let vals: Vec<f64> = ess.iter().flatten().copied().collect();
        let emin = vals.iter().copied().reduce(f64::min);
        let emax = vals.iter().copied().reduce(f64::max);
        let _ = writeln!(s, "ESS            {} .. {}", fmt_opt(emin, 0), fmt_opt(emax, 0));
    }
    if d.ess_tau.is_some() {
        let _ = writeln!(s, "ESS of tau     {}", fmt_opt(d.ess_tau, 0));
    }
    let _ = writeln!(
        s,
        "acceptance     {:.3} (harmonic mean across chains {})",
        report.acceptance_rate,
        fmt_opt(d.mean_accept_harmonic, 3)
    );
    let _ = writeln!(s, "roundoff flags {}", fmt_opt(d.roundoff_flag_fraction, 4));
    let _ = writeln!(
        s,
        "{:.0} draws/s ({:.2} s)",
        report.draws_per_second, report.wall_seconds
    );
    s
}
