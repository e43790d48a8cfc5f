//! Split-R̂ and effective sample size over retained traces.
//!
//! A trace for one dimension is laid out draw-major: `values[t * chains + c]`
//! is draw `t` of chain `c`.

use super::{DiagnosticsError, StreamingMoments};

fn check_trace(values: &[f64], chains: usize, min_draws: usize) -> Result<usize, DiagnosticsError> {
    if chains == 0 || values.len() % chains != 0 {
        return Err(DiagnosticsError::RaggedTrace {
            len: values.len(),
            chains,
        });
    }
    let draws = values.len() / chains;
    if draws < min_draws {
        return Err(DiagnosticsError::TooFewDraws {
            needed: min_draws,
            found: draws,
        });
    }
    Ok(draws)
}

fn chain_column(values: &[f64], chains: usize, c: usize) -> impl Iterator<Item = f64> + '_ {
    values.iter().skip(c).step_by(chains).copied()
}

fn mean_and_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    (mean, ss / (n - 1.0))
}

/// `sqrt(((n-1)/n W + B/n) / W)` from per-chain means and variances of
/// chains of length `n`.
fn rhat_from_summaries(n: f64, means: &[f64], vars: &[f64]) -> Result<f64, DiagnosticsError> {
    let m = means.len() as f64;
    let w = vars.iter().sum::<f64>() / m;
    if !(w > 0.0) || !w.is_finite() {
        return Err(DiagnosticsError::DegenerateTrace);
    }
    let grand = means.iter().sum::<f64>() / m;
    let b_over_n = means.iter().map(|x| (x - grand) * (x - grand)).sum::<f64>() / (m - 1.0);
    let var_plus = (n - 1.0) / n * w + b_over_n;
    Ok((var_plus / w).sqrt())
}

/// Split-R̂: every chain is cut into a first and a second half (the middle
/// draw is dropped when the length is odd) and the halves are compared as
/// `2C` chains.
pub fn split_rhat(values: &[f64], chains: usize) -> Result<f64, DiagnosticsError> {
    let draws = check_trace(values, chains, 4)?;
    let half = draws / 2;
    let mut means = Vec::with_capacity(2 * chains);
    let mut vars = Vec::with_capacity(2 * chains);
    let mut column = Vec::with_capacity(draws);
    for c in 0..chains {
        column.clear();
        column.extend(chain_column(values, chains, c));
        for part in [&column[..half], &column[draws - half..]] {
            let (m, v) = mean_and_var(part);
            means.push(m);
            vars.push(v);
        }
    }
    rhat_from_summaries(half as f64, &means, &vars)
}

/// Split-R̂ from moments accumulated separately over the first and second
/// halves of every chain. One entry per dimension.
pub fn streaming_split_rhat(
    first: &StreamingMoments,
    second: &StreamingMoments,
) -> Result<Vec<Result<f64, DiagnosticsError>>, DiagnosticsError> {
    if first.chains() != second.chains() || first.dim() != second.dim() {
        return Err(DiagnosticsError::ShapeMismatch {
            expected: (first.chains(), first.dim()),
            found: (second.chains(), second.dim()),
        });
    }
    if first.count() != second.count() || first.count() < 2 {
        return Err(DiagnosticsError::TooFewDraws {
            needed: 4,
            found: (first.count().min(second.count()) * 2) as usize,
        });
    }
    let n = first.count() as f64;
    let chains = first.chains();
    Ok((0..first.dim())
        .map(|p| {
            let mut means = Vec::with_capacity(2 * chains);
            let mut vars = Vec::with_capacity(2 * chains);
            for c in 0..chains {
                for half in [first, second] {
                    means.push(half.mean().get(c, p));
                    vars.push(half.variance(c, p).unwrap_or(0.0));
                }
            }
            rhat_from_summaries(n, &means, &vars)
        })
        .collect())
}

/// Effective sample size and integrated autocorrelation time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EssEstimate {
    pub ess: f64,
    pub tau: f64,
}

/// Multi-chain ESS: autocorrelations pooled across chains through the
/// within/between variance decomposition, summed in adjacent pairs until
/// a pair goes negative.
pub fn ess(values: &[f64], chains: usize) -> Result<f64, DiagnosticsError> {
    ess_estimate(values, chains).map(|e| e.ess)
}

pub fn ess_estimate(values: &[f64], chains: usize) -> Result<EssEstimate, DiagnosticsError> {
    let draws = check_trace(values, chains, 8)?;
    let n = draws as f64;
    let m = chains as f64;

    let mut centered = Vec::with_capacity(chains);
    let mut means = Vec::with_capacity(chains);
    for c in 0..chains {
        let col: Vec<f64> = chain_column(values, chains, c).collect();
        let mean = col.iter().sum::<f64>() / n;
        means.push(mean);
        centered.push(col.into_iter().map(|x| x - mean).collect::<Vec<_>>());
    }
    // Mean over chains of the biased lag-`lag` autocovariance.
    let mean_acov = |lag: usize| -> f64 {
        let mut acc = 0.0;
        for x in &centered {
            let s: f64 = x[..draws - lag].iter().zip(&x[lag..]).map(|(a, b)| a * b).sum();
            acc += s / n;
        }
        acc / m
    };

    let w = mean_acov(0) * n / (n - 1.0);
    if !(w > 0.0) || !w.is_finite() {
        return Err(DiagnosticsError::DegenerateTrace);
    }
    let b_over_n = if chains > 1 {
        let grand = means.iter().sum::<f64>() / m;
        means.iter().map(|x| (x - grand) * (x - grand)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    let var_plus = (n - 1.0) / n * w + b_over_n;
    let rho = |lag: usize| 1.0 - (w - mean_acov(lag)) / var_plus;

    let mut pair_sum = 0.0;
    let mut lag = 0;
    while lag + 1 < draws {
        let even = if lag == 0 { 1.0 } else { rho(lag) };
        let pair = even + rho(lag + 1);
        if pair < 0.0 {
            break;
        }
        pair_sum += pair;
        lag += 2;
    }
    let total = m * n;
    let tau = (-1.0 + 2.0 * pair_sum).max(1.0 / total.log10());
    let ess = (total / tau).min(total * total.log10());
    Ok(EssEstimate { ess, tau })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::RandomKey;

    fn interleave(columns: &[Vec<f64>]) -> Vec<f64> {
        let t = columns[0].len();
        let mut out = Vec::with_capacity(t * columns.len());
        for i in 0..t {
            for col in columns {
                out.push(col[i]);
            }
        }
        out
    }

    #[test]
    fn constant_chains_are_degenerate() {
        let v = vec![1.5; 40];
        assert_eq!(split_rhat(&v, 4), Err(DiagnosticsError::DegenerateTrace));
        assert_eq!(ess(&v, 4), Err(DiagnosticsError::DegenerateTrace));
    }

    #[test]
    fn short_traces_rejected() {
        assert!(matches!(
            split_rhat(&[1.0, 2.0, 3.0], 1),
            Err(DiagnosticsError::TooFewDraws { .. })
        ));
        assert!(matches!(
            ess(&[0.0; 7], 1),
            Err(DiagnosticsError::TooFewDraws { .. })
        ));
        assert!(split_rhat(&[0.0; 7], 2).is_err());
    }

    #[test]
    fn odd_length_drops_middle_draw() {
        let key = RandomKey::from_seed(3);
        let a = key.child(0).normal(21);
        let b = key.child(1).normal(21);
        let mut a20 = a.clone();
        a20.remove(10);
        let mut b20 = b.clone();
        b20.remove(10);
        let odd = split_rhat(&interleave(&[a, b]), 2).unwrap();
        let even = split_rhat(&interleave(&[a20, b20]), 2).unwrap();
        assert_eq!(odd, even);
    }

    #[test]
    fn duplicated_chain_matches_identical_copies() {
        let x = RandomKey::from_seed(4).normal(200);
        let dup = interleave(&[x.clone(), x.clone()]);
        let copy: Vec<f64> = x.iter().flat_map(|&v| [v, v]).collect();
        assert_eq!(dup, copy);
        assert_eq!(split_rhat(&dup, 2).unwrap(), split_rhat(&copy, 2).unwrap());
    }
}
