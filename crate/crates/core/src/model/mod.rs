//! Log-density targets and their data.

mod dataset;
mod gaussian;
mod sparse;

pub use dataset::{Dataset, DatasetError, SyntheticData};
pub use gaussian::GaussianTarget;
pub use sparse::{ConstrainedParams, GammaPrior, SparseLogisticRegression};

use thiserror::Error;

use crate::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("state has length {found}, target dimension is {expected}")]
    WrongLength { expected: usize, found: usize },
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: String, value: f64 },
    #[error("invalid prior: {0}")]
    InvalidPrior(String),
    #[error("replication factor must be at least 1")]
    InvalidReplication,
}

/// An unnormalized log-density over `R^P` with an analytic gradient.
///
/// Implementations must be pure: the same input always yields bitwise the
/// same output, whichever entry point computed it.
pub trait LogDensity<T: Real>: Sync {
    fn dim(&self) -> usize;

    fn log_prob(&self, z: &[T]) -> T;

    /// Writes `∇ log p(z)` into `grad` and returns `log p(z)`.
    fn value_and_grad(&self, z: &[T], grad: &mut [T]) -> T;

    /// `log p(z_new) - log p(z_old)`, computed as a sum of per-term
    /// differences so that large common magnitudes cancel before they are
    /// accumulated.
    fn log_prob_ratio(&self, z_new: &[T], z_old: &[T]) -> T;

    /// Evaluates `lanes` chains at once. `z` and `grad` are `P × lanes`
    /// tiles with lanes contiguous; `value` has one slot per lane.
    ///
    /// The default evaluates lane by lane. Results must match
    /// [`value_and_grad`](Self::value_and_grad) bitwise.
    fn value_and_grad_lanes(&self, z: &[T], lanes: usize, value: &mut [T], grad: &mut [T]) {
        let p = self.dim();
        let mut zc = vec![T::zero(); p];
        let mut gc = vec![T::zero(); p];
        for b in 0..lanes {
            for i in 0..p {
                zc[i] = z[i * lanes + b];
            }
            value[b] = self.value_and_grad(&zc, &mut gc);
            for i in 0..p {
                grad[i * lanes + b] = gc[i];
            }
        }
    }
}

/// `log(1 + e^t)` without overflow.
#[inline(always)]
pub(crate) fn softplus<T: Real>(t: T) -> T {
    t.max(T::zero()) + (-t.abs()).exp().ln_1p()
}

/// `log p(y | logit t)` for a Bernoulli label, in logit space.
#[inline(always)]
pub(crate) fn bernoulli_logit_log_prob<T: Real>(t: T, y: T) -> T {
    y * t - softplus(t)
}
