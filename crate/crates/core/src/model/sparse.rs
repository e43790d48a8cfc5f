//! Sparse Bayesian logistic regression:
//!
//! ```text
//! tau      ~ Gamma(shape, rate)
//! lambda_d ~ Gamma(shape, rate)
//! beta_d   ~ Normal(0, 1)
//! y_n      ~ Bernoulli(sigmoid(x_n . (tau * lambda * beta)))
//! ```
//!
//! Sampling happens on `z = [log tau, log lambda (D), beta (D)]`, so the
//! unconstrained density adds the log-det-Jacobian `log tau + sum log lambda`.

use statrs::function::gamma::ln_gamma;

use super::{bernoulli_logit_log_prob, LogDensity, ModelError};
use crate::model::Dataset;
use crate::Real;

const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

/// Gamma prior in shape/rate form with its normalizer precomputed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

impl Default for GammaPrior {
    fn default() -> Self {
        GammaPrior {
            shape: 0.5,
            rate: 0.5,
        }
    }
}

impl GammaPrior {
    /// `shape * ln(rate) - ln Γ(shape)`.
    pub fn log_normalizer(&self) -> f64 {
        self.shape * self.rate.ln() - ln_gamma(self.shape)
    }

    /// Log-density at `x > 0`, in double precision.
    pub fn log_pdf(&self, x: f64) -> f64 {
        self.log_normalizer() + (self.shape - 1.0) * x.ln() - self.rate * x
    }
}

/// Positive scales and raw coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedParams<T> {
    pub tau: T,
    pub lamb: Vec<T>,
    pub beta: Vec<T>,
}

/// The conditioned sparse logistic-regression posterior, evaluated in
/// precision `T`.
///
/// A replication factor `K` makes the likelihood that of the dataset
/// stacked `K` times. Rows are stored once and each row's contribution is
/// weighted by `K`.
#[derive(Debug, Clone)]
pub struct SparseLogisticRegression<T> {
    n: usize,
    d: usize,
    x: Vec<T>,
    y: Vec<T>,
    replication: usize,
    weight: T,
    prior: GammaPrior,
    log_norm: T,
    shape: T,
    rate: T,
}

impl<T: Real> SparseLogisticRegression<T> {
    pub fn new(data: &Dataset) -> Self {
        let prior = GammaPrior::default();
        SparseLogisticRegression {
            n: data.n(),
            d: data.d(),
            x: data.x().iter().map(|&v| T::cast(v)).collect(),
            y: data.y().iter().map(|&v| T::cast(v as f64)).collect(),
            replication: 1,
            weight: T::one(),
            prior,
            log_norm: T::cast(prior.log_normalizer()),
            shape: T::cast(prior.shape),
            rate: T::cast(prior.rate),
        }
    }

    pub fn with_prior(mut self, prior: GammaPrior) -> Result<Self, ModelError> {
        if !(prior.shape > 0.0 && prior.rate > 0.0) {
            return Err(ModelError::InvalidPrior(format!(
                "shape {} and rate {} must be positive",
                prior.shape, prior.rate
            )));
        }
        self.prior = prior;
        self.log_norm = T::cast(prior.log_normalizer());
        self.shape = T::cast(prior.shape);
        self.rate = T::cast(prior.rate);
        Ok(self)
    }

    pub fn with_replication(mut self, k: usize) -> Result<Self, ModelError> {
        if k == 0 {
            return Err(ModelError::InvalidReplication);
        }
        self.replication = k;
        self.weight = T::cast(k as f64);
        Ok(self)
    }

    pub fn num_features(&self) -> usize {
        self.d
    }

    pub fn num_observations(&self) -> usize {
        self.n
    }

    pub fn replication(&self) -> usize {
        self.replication
    }

    pub fn prior(&self) -> GammaPrior {
        self.prior
    }

    fn check_len(&self, z: &[T]) -> Result<(), ModelError> {
        let expected = 1 + 2 * self.d;
        if z.len() != expected {
            return Err(ModelError::WrongLength {
                expected,
                found: z.len(),
            });
        }
        Ok(())
    }

    /// Maps `z` to `(tau, lambda, beta)` and returns the log-det-Jacobian
    /// `z_0 + sum_d z_{1+d}`.
    pub fn constrain(&self, z: &[T]) -> Result<(ConstrainedParams<T>, T), ModelError> {
        self.check_len(z)?;
        let d = self.d;
        let tau = z[0].exp();
        let lamb = z[1..1 + d].iter().map(|u| u.exp()).collect();
        let beta = z[1 + d..].to_vec();
        let ldj = z[0] + sum(z[1..1 + d].iter().copied());
        Ok((ConstrainedParams { tau, lamb, beta }, ldj))
    }

    /// Inverse of [`constrain`](Self::constrain).
    pub fn unconstrain(&self, params: &ConstrainedParams<T>) -> Result<Vec<T>, ModelError> {
        self.check_params(params)?;
        let mut z = Vec::with_capacity(1 + 2 * self.d);
        z.push(params.tau.ln());
        z.extend(params.lamb.iter().map(|l| l.ln()));
        z.extend_from_slice(&params.beta);
        Ok(z)
    }

    fn check_params(&self, params: &ConstrainedParams<T>) -> Result<(), ModelError> {
        if params.lamb.len() != self.d || params.beta.len() != self.d {
            return Err(ModelError::WrongLength {
                expected: self.d,
                found: params.lamb.len().min(params.beta.len()),
            });
        }
        if !(params.tau > T::zero()) {
            return Err(ModelError::NonPositive {
                name: "tau".into(),
                value: params.tau.widen(),
            });
        }
        if let Some((i, l)) = params
            .lamb
            .iter()
            .enumerate()
            .find(|(_, l)| !(**l > T::zero()))
        {
            return Err(ModelError::NonPositive {
                name: format!("lambda[{i}]"),
                value: l.widen(),
            });
        }
        Ok(())
    }

    /// Joint log-density of the constrained parameters and the data.
    pub fn joint_log_prob(&self, params: &ConstrainedParams<T>) -> Result<T, ModelError> {
        self.check_params(params)?;
        let mut lp = self.gamma_log_pdf(params.tau);
        lp = lp + sum(params.lamb.iter().map(|&l| self.gamma_log_pdf(l)));
        lp = lp + sum(params.beta.iter().map(|&b| normal_log_pdf(b)));
        let w: Vec<T> = params
            .lamb
            .iter()
            .zip(&params.beta)
            .map(|(&l, &b)| params.tau * l * b)
            .collect();
        lp = lp + self.log_likelihood(&w);
        Ok(lp)
    }

    /// Log-density of the unconstrained state (prior + likelihood + ldj).
    pub fn unconstrained_log_prob(&self, z: &[T]) -> Result<T, ModelError> {
        self.check_len(z)?;
        Ok(self.log_prob(z))
    }

    fn gamma_log_pdf(&self, x: T) -> T {
        self.log_norm + (self.shape - T::one()) * x.ln() - self.rate * x
    }

    /// Gamma log-density at `e^u`, written in terms of `u` directly.
    #[inline(always)]
    fn scale_term(&self, u: T, scale: T) -> T {
        self.log_norm + (self.shape - T::one()) * u - self.rate * scale
    }

    fn log_likelihood(&self, w: &[T]) -> T {
        let mut acc = T::zero();
        for (row, &y) in self.x.chunks_exact(self.d).zip(&self.y) {
            let t = dot(row, w);
            acc = acc + self.weight * bernoulli_logit_log_prob(t, y);
        }
        acc
    }

    /// Batched kernel over a `P × lanes` tile. The per-lane arithmetic is
    /// identical whatever `lanes` is, so blocked and single-chain
    /// evaluations agree bitwise.
    fn kernel(&self, z: &[T], lanes: usize, value: &mut [T], grad: Option<&mut [T]>) {
        let d = self.d;
        let lane = |i: usize| &z[i * lanes..(i + 1) * lanes];
        let zero = T::zero();

        let tau: Vec<T> = lane(0).iter().map(|u| u.exp()).collect();
        let mut lamb = vec![zero; d * lanes];
        let mut w = vec![zero; d * lanes];
        for j in 0..d {
            let u = lane(1 + j);
            let beta = lane(1 + d + j);
            let l = &mut lamb[j * lanes..(j + 1) * lanes];
            let wj = &mut w[j * lanes..(j + 1) * lanes];
            for b in 0..lanes {
                l[b] = u[b].exp();
                wj[b] = tau[b] * l[b] * beta[b];
            }
        }

        let mut lamb_sum = vec![zero; lanes];
        let mut beta_sum = vec![zero; lanes];
        let mut ldj_lamb = vec![zero; lanes];
        for j in 0..d {
            let u = lane(1 + j);
            let beta = lane(1 + d + j);
            let l = &lamb[j * lanes..(j + 1) * lanes];
            for b in 0..lanes {
                lamb_sum[b] = lamb_sum[b] + self.scale_term(u[b], l[b]);
                beta_sum[b] = beta_sum[b] + normal_log_pdf(beta[b]);
                ldj_lamb[b] = ldj_lamb[b] + u[b];
            }
        }

        let mut loglik = vec![zero; lanes];
        let mut logits = vec![zero; lanes];
        let mut resid = vec![zero; lanes];
        let want_grad = grad.is_some();
        let mut g = if want_grad { vec![zero; d * lanes] } else { Vec::new() };
        for (row, &y) in self.x.chunks_exact(d).zip(&self.y) {
            logits.iter_mut().for_each(|t| *t = zero);
            for (j, &xv) in row.iter().enumerate() {
                let wj = &w[j * lanes..(j + 1) * lanes];
                for (t, &wv) in logits.iter_mut().zip(wj) {
                    *t = *t + xv * wv;
                }
            }
            for b in 0..lanes {
                let t = logits[b];
                let e = (-t.abs()).exp();
                let softplus = t.max(zero) + e.ln_1p();
                loglik[b] = loglik[b] + self.weight * (y * t - softplus);
                if want_grad {
                    let sig = if t >= zero {
                        T::one() / (T::one() + e)
                    } else {
                        e / (T::one() + e)
                    };
                    resid[b] = self.weight * (y - sig);
                }
            }
            if want_grad {
                for (j, &xv) in row.iter().enumerate() {
                    let gj = &mut g[j * lanes..(j + 1) * lanes];
                    for (gv, &r) in gj.iter_mut().zip(&resid) {
                        *gv = *gv + xv * r;
                    }
                }
            }
        }

        let u_tau = lane(0);
        for b in 0..lanes {
            let lp = self.scale_term(u_tau[b], tau[b]) + lamb_sum[b] + beta_sum[b] + loglik[b]
                + (u_tau[b] + ldj_lamb[b]);
            value[b] = if lp.is_nan() { T::neg_infinity() } else { lp };
        }

        if let Some(grad) = grad {
            let mut tau_grad = vec![zero; lanes];
            for j in 0..d {
                let beta = lane(1 + d + j);
                let l = &lamb[j * lanes..(j + 1) * lanes];
                let wj = &w[j * lanes..(j + 1) * lanes];
                let gj = &g[j * lanes..(j + 1) * lanes];
                for b in 0..lanes {
                    grad[(1 + j) * lanes + b] = (self.shape - self.rate * l[b]) + wj[b] * gj[b];
                    grad[(1 + d + j) * lanes + b] = -beta[b] + tau[b] * l[b] * gj[b];
                    tau_grad[b] = tau_grad[b] + wj[b] * gj[b];
                }
            }
            for b in 0..lanes {
                grad[b] = (self.shape - self.rate * tau[b]) + tau_grad[b];
            }
        }
    }
}

impl<T: Real> LogDensity<T> for SparseLogisticRegression<T> {
    fn dim(&self) -> usize {
        1 + 2 * self.d
    }

    fn log_prob(&self, z: &[T]) -> T {
        let mut v = [T::zero()];
        self.kernel(z, 1, &mut v, None);
        v[0]
    }

    fn value_and_grad(&self, z: &[T], grad: &mut [T]) -> T {
        let mut v = [T::zero()];
        self.kernel(z, 1, &mut v, Some(grad));
        v[0]
    }

    fn value_and_grad_lanes(&self, z: &[T], lanes: usize, value: &mut [T], grad: &mut [T]) {
        self.kernel(z, lanes, value, Some(grad));
    }

    fn log_prob_ratio(&self, z_new: &[T], z_old: &[T]) -> T {
        // Every term is rewritten in terms of the state increment so that
        // nothing of the size of the log-density itself is ever rounded.
        let d = self.d;
        let one = T::one();
        let half = T::cast(0.5);
        let du_tau = z_new[0] - z_old[0];
        let mut lpr = self.scale_term_diff(z_old[0], du_tau);

        let mut w_old = vec![T::zero(); d];
        let mut dw = vec![T::zero(); d];
        let mut lamb_diff = T::zero();
        let mut beta_diff = T::zero();
        let mut ldj_diff = du_tau;
        for j in 0..d {
            let (un, uo) = (z_new[1 + j], z_old[1 + j]);
            let (bn, bo) = (z_new[1 + d + j], z_old[1 + d + j]);
            let du = un - uo;
            lamb_diff = lamb_diff + self.scale_term_diff(uo, du);
            beta_diff = beta_diff - half * (bn - bo) * (bn + bo);
            ldj_diff = ldj_diff + du;
            // The 2D coefficients are formed in double precision and rounded
            // once; the per-row work below stays in T.
            let (bn64, bo64) = (bn.widen(), bo.widen());
            let scale_old = (z_old[0].widen() + uo.widen()).exp();
            let growth = (du_tau.widen() + du.widen()).exp_m1();
            w_old[j] = T::cast(scale_old * bo64);
            dw[j] = T::cast(scale_old * (growth * bn64 + (bn64 - bo64)));
        }
        lpr = lpr + lamb_diff;
        lpr = lpr + beta_diff;

        let mut lik_diff = CompensatedSum::default();
        for (row, &y) in self.x.chunks_exact(d).zip(&self.y) {
            let t_old = dot(row, &w_old);
            let dt = dot(row, &dw);
            let term = if dt.abs() <= one {
                let e = (-t_old.abs()).exp();
                let sig = if t_old >= T::zero() {
                    one / (one + e)
                } else {
                    e / (one + e)
                };
                y * dt - (dt.exp_m1() * sig).ln_1p()
            } else {
                let t_new = t_old + dt;
                bernoulli_logit_log_prob(t_new, y) - bernoulli_logit_log_prob(t_old, y)
            };
            lik_diff.add(term);
        }
        let lik_diff = self.weight * lik_diff.total();
        lpr = lpr + lik_diff;

        let r = lpr + ldj_diff;
        if r.is_nan() {
            T::neg_infinity()
        } else {
            r
        }
    }
}

impl<T: Real> SparseLogisticRegression<T> {
    /// `scale_term(u + du) - scale_term(u)`.
    #[inline(always)]
    fn scale_term_diff(&self, u: T, du: T) -> T {
        (self.shape - T::one()) * du - self.rate * u.exp() * du.exp_m1()
    }
}

/// Neumaier's compensated summation.
#[derive(Default)]
struct CompensatedSum<T> {
    sum: T,
    carry: T,
}

impl<T: Real> CompensatedSum<T> {
    #[inline(always)]
    fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry = self.carry + ((self.sum - t) + x);
        } else {
            self.carry = self.carry + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    fn total(&self) -> T {
        self.sum + self.carry
    }
}

#[inline(always)]
fn normal_log_pdf<T: Real>(b: T) -> T {
    T::cast(-HALF_LN_TWO_PI) - T::cast(0.5) * b * b
}

#[inline(always)]
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        acc = acc + x * y;
    }
    acc
}

#[inline(always)]
fn sum<T: Real>(it: impl Iterator<Item = T>) -> T {
    it.fold(T::zero(), |a, b| a + b)
}
