use crate::{ChainMatrix, Real};

use super::DiagnosticsError;

/// Per-chain, per-dimension running mean and sum of squared deviations.
///
/// All chains see the same number of updates, so a single `count` covers
/// every cell.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamingMoments {
    count: u64,
    mean: ChainMatrix<f64>,
    m2: ChainMatrix<f64>,
}

impl StreamingMoments {
    pub fn new(chains: usize, dim: usize) -> Self {
        StreamingMoments {
            count: 0,
            mean: ChainMatrix::zeros(chains, dim),
            m2: ChainMatrix::zeros(chains, dim),
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn chains(&self) -> usize {
        self.mean.chains()
    }

    pub fn dim(&self) -> usize {
        self.mean.dim()
    }

    pub fn mean(&self) -> &ChainMatrix<f64> {
        &self.mean
    }

    pub fn m2(&self) -> &ChainMatrix<f64> {
        &self.m2
    }

    fn check_shape(&self, chains: usize, dim: usize) -> Result<(), DiagnosticsError> {
        if self.chains() != chains || self.dim() != dim {
            return Err(DiagnosticsError::ShapeMismatch {
                expected: (self.chains(), self.dim()),
                found: (chains, dim),
            });
        }
        Ok(())
    }

    /// Folds one draw per chain into the accumulator.
    pub fn update<T: Real>(&mut self, x: &ChainMatrix<T>) -> Result<(), DiagnosticsError> {
        self.check_shape(x.chains(), x.dim())?;
        self.count += 1;
        let n = self.count as f64;
        let xs = x.as_slice();
        let means = self.mean.as_mut_slice();
        let m2s = self.m2.as_mut_slice();
        for i in 0..xs.len() {
            let v = xs[i].widen();
            let delta = v - means[i];
            means[i] += delta / n;
            m2s[i] += delta * (v - means[i]);
        }
        Ok(())
    }

    /// Chan et al. pairwise combination of two accumulators over the same
    /// chains.
    pub fn merge(&self, other: &StreamingMoments) -> Result<StreamingMoments, DiagnosticsError> {
        self.check_shape(other.chains(), other.dim())?;
        if other.count == 0 {
            return Ok(self.clone());
        }
        if self.count == 0 {
            return Ok(other.clone());
        }
        let mut out = self.clone();
        out.count = self.count + other.count;
        let (na, nb) = (self.count as f64, other.count as f64);
        let (ma, mb) = (self.mean.as_slice(), other.mean.as_slice());
        let (qa, qb) = (self.m2.as_slice(), other.m2.as_slice());
        let means = out.mean.as_mut_slice();
        let m2s = out.m2.as_mut_slice();
        for i in 0..means.len() {
            let (mean, m2) = combine(na, ma[i], qa[i], nb, mb[i], qb[i]);
            means[i] = mean;
            m2s[i] = m2;
        }
        Ok(out)
    }

    /// Sample variance of one chain in one dimension.
    pub fn variance(&self, chain: usize, dim: usize) -> Option<f64> {
        (self.count >= 2).then(|| self.m2.get(chain, dim) / (self.count - 1) as f64)
    }

    /// Mean and sum of squared deviations of dimension `dim` with all
    /// chains pooled, combined in chain order.
    pub fn pooled(&self, dim: usize) -> (u64, f64, f64) {
        let n = self.count as f64;
        let mut total = 0.0;
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for c in 0..self.chains() {
            (mean, m2) = combine(total, mean, m2, n, self.mean.get(c, dim), self.m2.get(c, dim));
            total += n;
        }
        (self.count * self.chains() as u64, mean, m2)
    }

    pub fn pooled_mean(&self) -> Vec<f64> {
        (0..self.dim()).map(|p| self.pooled(p).1).collect()
    }

    /// Sample variance per dimension with all chains pooled.
    pub fn pooled_variance(&self) -> Option<Vec<f64>> {
        let (total, _, _) = self.pooled(0);
        (total >= 2).then(|| {
            (0..self.dim())
                .map(|p| self.pooled(p).2 / (total - 1) as f64)
                .collect()
        })
    }
}

#[inline]
fn combine(na: f64, ma: f64, qa: f64, nb: f64, mb: f64, qb: f64) -> (f64, f64) {
    if na == 0.0 {
        return (mb, qb);
    }
    if nb == 0.0 {
        return (ma, qa);
    }
    let n = na + nb;
    let delta = mb - ma;
    let mean = ma + delta * (nb / n);
    let m2 = qa + qb + delta * delta * (na * nb / n);
    (mean, m2)
}
