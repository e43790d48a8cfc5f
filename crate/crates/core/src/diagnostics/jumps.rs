use crate::{ChainMatrix, Real};

use super::DiagnosticsError;

fn check_pair<T: Copy + Default, U: Copy + Default>(
    prev: &ChainMatrix<T>,
    next: &ChainMatrix<U>,
) -> Result<(), DiagnosticsError> {
    if prev.chains() != next.chains() || prev.dim() != next.dim() {
        return Err(DiagnosticsError::ShapeMismatch {
            expected: (prev.chains(), prev.dim()),
            found: (next.chains(), next.dim()),
        });
    }
    Ok(())
}

/// Mean over chains of `|next_c - prev_c|^2`.
pub fn esjd<T: Real>(prev: &ChainMatrix<T>, next: &ChainMatrix<T>) -> Result<f64, DiagnosticsError> {
    check_pair(prev, next)?;
    let chains = prev.chains();
    let mut total = 0.0;
    for c in 0..chains {
        let mut sq = 0.0;
        for p in 0..prev.dim() {
            let d = next.get(c, p).widen() - prev.get(c, p).widen();
            sq += d * d;
        }
        total += sq;
    }
    Ok(total / chains as f64)
}

fn squared_radius<T: Real>(x: &ChainMatrix<T>, c: usize, center: &[f64]) -> f64 {
    let mut r = 0.0;
    for (p, &m) in center.iter().enumerate() {
        let d = x.get(c, p).widen() - m;
        r += d * d;
    }
    r
}

/// `1/4` of the mean over chains of the squared change in
/// `|theta - center|^2` between `prev` and `next`.
pub fn chees<T: Real>(
    prev: &ChainMatrix<T>,
    next: &ChainMatrix<T>,
    center: &[f64],
) -> Result<f64, DiagnosticsError> {
    check_pair(prev, next)?;
    if center.len() != prev.dim() {
        return Err(DiagnosticsError::ShapeMismatch {
            expected: (1, prev.dim()),
            found: (1, center.len()),
        });
    }
    let chains = prev.chains();
    let mut total = 0.0;
    for c in 0..chains {
        let d = squared_radius(next, c, center) - squared_radius(prev, c, center);
        total += d * d;
    }
    Ok(0.25 * (total / chains as f64))
}

/// Running mean of a per-step statistic.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningMean {
    sum: f64,
    count: u64,
}

impl RunningMean {
    pub fn push(&mut self, x: f64) {
        self.sum += x;
        self.count += 1;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum / self.count as f64)
    }
}
