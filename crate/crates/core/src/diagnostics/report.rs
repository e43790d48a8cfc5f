use serde::{Deserialize, Serialize};

use super::{
    accept_prob, chees, ess, ess_estimate, esjd, harmonic_mean_acceptance, is_suspicious,
    split_rhat, streaming_split_rhat, DiagnosticsError, RunningMean, StreamingMoments,
};
use crate::sampler::{Draw, SampleSink, SinkError, ACCEPT_PROB_FLOOR};
use crate::Real;

/// Summary of a run. Entries that cannot be computed (a degenerate
/// dimension, too few draws, traces not retained) are `None` and
/// serialize as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub num_chains: usize,
    pub num_draws: usize,
    pub rhat: Vec<Option<f64>>,
    pub ess: Option<Vec<Option<f64>>>,
    pub ess_tau: Option<f64>,
    pub esjd: Option<f64>,
    pub chees: Option<f64>,
    pub mean_accept_harmonic: Option<f64>,
    pub roundoff_flag_fraction: Option<f64>,
}

impl DiagnosticsReport {
    /// Largest R̂ over the dimensions where it could be computed.
    pub fn max_rhat(&self) -> Option<f64> {
        self.rhat
            .iter()
            .flatten()
            .copied()
            .fold(None, |acc, r| Some(acc.map_or(r, |a: f64| a.max(r))))
    }
}

/// A sink that can summarize what it has seen.
pub trait Recorder<T>: SampleSink<T> {
    fn report(&self) -> DiagnosticsReport;
}

/// Statistics both recorders maintain on the fly.
#[derive(Debug, Clone)]
struct StreamStats {
    draws: usize,
    running: StreamingMoments,
    esjd: RunningMean,
    chees: RunningMean,
    accept_hmean: RunningMean,
    flagged: u64,
    ratios: u64,
    probs: Vec<f64>,
}

impl StreamStats {
    fn new(chains: usize, dim: usize) -> Self {
        StreamStats {
            draws: 0,
            running: StreamingMoments::new(chains, dim),
            esjd: RunningMean::default(),
            chees: RunningMean::default(),
            accept_hmean: RunningMean::default(),
            flagged: 0,
            ratios: 0,
            probs: vec![0.0; chains],
        }
    }

    fn record<T: Real>(&mut self, draw: &Draw<'_, T>) -> Result<(), DiagnosticsError> {
        self.running.update(draw.state())?;
        let center = self.running.pooled_mean();
        self.esjd.push(esjd(draw.prev, draw.state())?);
        self.chees.push(chees(draw.prev, draw.state(), &center)?);
        for (p, &lar) in self.probs.iter_mut().zip(&draw.output.log_accept_ratio) {
            *p = accept_prob(lar, ACCEPT_PROB_FLOOR);
            self.flagged += is_suspicious(lar) as u64;
            self.ratios += 1;
        }
        self.accept_hmean.push(harmonic_mean_acceptance(&self.probs)?);
        self.draws += 1;
        Ok(())
    }

    fn fill(&self, report: &mut DiagnosticsReport) {
        report.num_draws = self.draws;
        report.esjd = self.esjd.mean();
        report.chees = self.chees.mean();
        report.mean_accept_harmonic = self.accept_hmean.mean();
        report.roundoff_flag_fraction =
            (self.ratios > 0).then(|| self.flagged as f64 / self.ratios as f64);
    }

    fn check_shape(&self, chains: usize, dim: usize) -> Result<(), DiagnosticsError> {
        if self.running.chains() != chains || self.running.dim() != dim {
            return Err(DiagnosticsError::ShapeMismatch {
                expected: (self.running.chains(), self.running.dim()),
                found: (chains, dim),
            });
        }
        Ok(())
    }
}

/// Keeps every draw, so batch split-R̂ and ESS are available.
#[derive(Debug, Clone)]
pub struct TraceRecorder {
    chains: usize,
    dim: usize,
    // traces[p][t * chains + c]
    traces: Vec<Vec<f64>>,
    log_accept_ratio: Vec<f64>,
    is_accepted: Vec<bool>,
    tau_index: Option<usize>,
    stats: StreamStats,
}

impl TraceRecorder {
    pub fn new(chains: usize, dim: usize) -> Self {
        TraceRecorder {
            chains,
            dim,
            traces: vec![Vec::new(); dim],
            log_accept_ratio: Vec::new(),
            is_accepted: Vec::new(),
            tau_index: None,
            stats: StreamStats::new(chains, dim),
        }
    }

    /// Reserves room for `draws` draws up front, failing instead of
    /// aborting when the allocation is impossible.
    pub fn with_capacity(
        chains: usize,
        dim: usize,
        draws: usize,
    ) -> Result<Self, std::collections::TryReserveError> {
        let mut r = TraceRecorder::new(chains, dim);
        let cells = draws.saturating_mul(chains);
        for t in &mut r.traces {
            t.try_reserve_exact(cells)?;
        }
        r.log_accept_ratio.try_reserve_exact(cells)?;
        r.is_accepted.try_reserve_exact(cells)?;
        Ok(r)
    }

    /// Also report the ESS of `exp(z[index])` (the global scale of the
    /// sparse model when `index` is 0).
    pub fn with_tau_index(mut self, index: Option<usize>) -> Self {
        self.tau_index = index;
        self
    }

    pub fn chains(&self) -> usize {
        self.chains
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_draws(&self) -> usize {
        self.stats.draws
    }

    /// Draw-major trace of one dimension.
    pub fn trace(&self, dim: usize) -> &[f64] {
        &self.traces[dim]
    }

    pub fn value(&self, draw: usize, chain: usize, dim: usize) -> f64 {
        self.traces[dim][draw * self.chains + chain]
    }

    pub fn log_accept_ratio(&self, draw: usize, chain: usize) -> f64 {
        self.log_accept_ratio[draw * self.chains + chain]
    }

    pub fn is_accepted(&self, draw: usize, chain: usize) -> bool {
        self.is_accepted[draw * self.chains + chain]
    }

    pub fn log_accept_ratios(&self) -> &[f64] {
        &self.log_accept_ratio
    }
}

impl<T: Real> SampleSink<T> for TraceRecorder {
    fn record(&mut self, draw: &Draw<'_, T>) -> Result<(), SinkError> {
        let z = draw.state();
        self.stats.check_shape(z.chains(), z.dim())?;
        for (p, trace) in self.traces.iter_mut().enumerate() {
            trace.extend(z.param(p).iter().map(|v| v.widen()));
        }
        self.log_accept_ratio
            .extend_from_slice(&draw.output.log_accept_ratio);
        self.is_accepted.extend_from_slice(&draw.output.is_accepted);
        self.stats.record(draw)?;
        Ok(())
    }
}

impl TraceRecorder {
    pub fn report(&self) -> DiagnosticsReport {
        let mut report = DiagnosticsReport {
            num_chains: self.chains,
            num_draws: 0,
            rhat: self
                .traces
                .iter()
                .map(|t| split_rhat(t, self.chains).ok())
                .collect(),
            ess: Some(
                self.traces
                    .iter()
                    .map(|t| ess(t, self.chains).ok())
                    .collect(),
            ),
            ess_tau: self.tau_index.and_then(|i| {
                let tau: Vec<f64> = self.traces[i].iter().map(|u| u.exp()).collect();
                ess_estimate(&tau, self.chains).ok().map(|e| e.ess)
            }),
            esjd: None,
            chees: None,
            mean_accept_harmonic: None,
            roundoff_flag_fraction: None,
        };
        self.stats.fill(&mut report);
        report
    }
}

/// Keeps only running moments. Each chain's first and second halves are
/// accumulated separately, which is enough for split-R̂ but not for ESS.
#[derive(Debug, Clone)]
pub struct MomentsRecorder {
    expected_draws: usize,
    first: StreamingMoments,
    second: StreamingMoments,
    stats: StreamStats,
}

impl MomentsRecorder {
    /// `expected_draws` fixes where each chain is split in half.
    pub fn new(chains: usize, dim: usize, expected_draws: usize) -> Self {
        MomentsRecorder {
            expected_draws,
            first: StreamingMoments::new(chains, dim),
            second: StreamingMoments::new(chains, dim),
            stats: StreamStats::new(chains, dim),
        }
    }

    pub fn first_half(&self) -> &StreamingMoments {
        &self.first
    }

    pub fn second_half(&self) -> &StreamingMoments {
        &self.second
    }
}

impl<T: Real> SampleSink<T> for MomentsRecorder {
    fn record(&mut self, draw: &Draw<'_, T>) -> Result<(), SinkError> {
        let half = self.expected_draws / 2;
        let t = self.stats.draws;
        if t < half {
            self.first.update(draw.state())?;
        } else if t >= self.expected_draws - half {
            self.second.update(draw.state())?;
        }
        self.stats.record(draw)?;
        Ok(())
    }
}

impl MomentsRecorder {
    pub fn report(&self) -> DiagnosticsReport {
        let dim = self.first.dim();
        let rhat = match streaming_split_rhat(&self.first, &self.second) {
            Ok(r) => r.into_iter().map(|r| r.ok()).collect(),
            Err(_) => vec![None; dim],
        };
        let mut report = DiagnosticsReport {
            num_chains: self.first.chains(),
            num_draws: 0,
            rhat,
            ess: None,
            ess_tau: None,
            esjd: None,
            chees: None,
            mean_accept_harmonic: None,
            roundoff_flag_fraction: None,
        };
        self.stats.fill(&mut report);
        report
    }
}

impl<T: Real> Recorder<T> for TraceRecorder {
    fn report(&self) -> DiagnosticsReport {
        TraceRecorder::report(self)
    }
}

impl<T: Real> Recorder<T> for MomentsRecorder {
    fn report(&self) -> DiagnosticsReport {
        MomentsRecorder::report(self)
    }
}
