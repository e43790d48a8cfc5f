//! Value-and-gradient evaluation with a finite-difference oracle.
//!
//! Gradients come from the targets themselves (see
//! [`LogDensity::value_and_grad`]); this module wraps them in an owned
//! result and checks them against central differences.

use thiserror::Error;

use crate::model::LogDensity;
use crate::{Precision, Real};

/// Below this magnitude an analytic gradient component is compared in
/// absolute rather than relative terms.
pub const ABSOLUTE_FALLBACK: f64 = 1e-8;

/// Default finite-difference step.
pub const DEFAULT_STEP: f64 = 1e-5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GradientError {
    #[error("finite-difference step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("the finite-difference oracle is only defined in double precision")]
    SinglePrecision,
    #[error("state has length {found}, target dimension is {expected}")]
    WrongLength { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueAndGrad<T> {
    pub value: T,
    pub grad: Vec<T>,
}

pub fn value_and_grad<T: Real, M: LogDensity<T> + ?Sized>(
    target: &M,
    z: &[T],
) -> Result<ValueAndGrad<T>, GradientError> {
    check_len(target.dim(), z.len())?;
    let mut grad = vec![T::zero(); z.len()];
    let value = target.value_and_grad(z, &mut grad);
    Ok(ValueAndGrad { value, grad })
}

fn check_len(expected: usize, found: usize) -> Result<(), GradientError> {
    if expected == found {
        Ok(())
    } else {
        Err(GradientError::WrongLength { expected, found })
    }
}

/// Largest discrepancy between the analytic gradient and
/// `(f(z + h e_i) - f(z - h e_i)) / 2h` over all coordinates.
///
/// The numerator is evaluated with [`LogDensity::log_prob_ratio`].
///
/// The error is relative to `|grad_i|`, or absolute when `|grad_i|` is
/// below [`ABSOLUTE_FALLBACK`].
pub fn finite_difference_check<T: Real, M: LogDensity<T> + ?Sized>(
    target: &M,
    z: &[T],
    h: f64,
) -> Result<f64, GradientError> {
    if T::PRECISION == Precision::Single {
        return Err(GradientError::SinglePrecision);
    }
    if !(h > 0.0) {
        return Err(GradientError::NonPositiveStep(h));
    }
    let analytic = value_and_grad(target, z)?;
    let mut up = z.to_vec();
    let mut down = z.to_vec();
    let mut worst = 0.0f64;
    for i in 0..z.len() {
        up[i] = T::cast(z[i].widen() + h);
        down[i] = T::cast(z[i].widen() - h);
        // The ratio cancels every term that does not involve coordinate i,
        // and dividing by the representable step removes rounding in z ± h.
        let rise = target.log_prob_ratio(&up, &down).widen();
        let run = up[i].widen() - down[i].widen();
        up[i] = z[i];
        down[i] = z[i];

        let numeric = rise / run;
        let g = analytic.grad[i].widen();
        let err = if g.abs() < ABSOLUTE_FALLBACK {
            (g - numeric).abs()
        } else {
            ((g - numeric) / g).abs()
        };
        // NaN must not be swallowed by max.
        if err.is_nan() {
            return Ok(f64::NAN);
        }
        worst = worst.max(err);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GaussianTarget;

    #[test]
    fn gaussian_gradient_matches_state() {
        let t = GaussianTarget::<f64>::standard(2);
        let vg = value_and_grad(&t, &[1.0, -2.0]).unwrap();
        assert_eq!(vg.grad, vec![-1.0, 2.0]);
        assert_eq!(vg.value, t.log_prob(&[1.0, -2.0]));
    }

    #[test]
    fn zero_step_rejected() {
        let t = GaussianTarget::<f64>::standard(2);
        assert_eq!(
            finite_difference_check(&t, &[0.0, 0.0], 0.0),
            Err(GradientError::NonPositiveStep(0.0))
        );
        assert!(finite_difference_check(&t, &[0.0, 0.0], -1e-5).is_err());
    }

    #[test]
    fn single_precision_rejected() {
        let t = GaussianTarget::<f32>::standard(2);
        assert_eq!(
            finite_difference_check(&t, &[0.5, 0.5], 1e-3),
            Err(GradientError::SinglePrecision)
        );
    }

    #[test]
    fn wrong_length_rejected() {
        let t = GaussianTarget::<f64>::standard(3);
        assert!(matches!(
            value_and_grad(&t, &[0.0]),
            Err(GradientError::WrongLength { expected: 3, found: 1 })
        ));
    }
}
