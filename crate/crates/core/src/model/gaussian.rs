use super::LogDensity;
use crate::Real;

/// Zero-mean Gaussian with independent coordinates, used as a test
/// harness: `log p(z) = -1/2 sum (z_i / sigma_i)^2` (unnormalized).
#[derive(Debug, Clone)]
pub struct GaussianTarget<T> {
    scale: Vec<T>,
}

impl<T: Real> GaussianTarget<T> {
    /// Standard normal in `dim` dimensions.
    pub fn standard(dim: usize) -> Self {
        GaussianTarget {
            scale: vec![T::one(); dim],
        }
    }

    /// Independent coordinates with the given standard deviations.
    pub fn with_scales(scales: &[f64]) -> Self {
        assert!(scales.iter().all(|&s| s > 0.0), "scales must be positive");
        GaussianTarget {
            scale: scales.iter().map(|&s| T::cast(s)).collect(),
        }
    }

    pub fn scales(&self) -> &[T] {
        &self.scale
    }

    #[inline(always)]
    fn term(z: T, s: T) -> T {
        let r = z / s;
        -(T::cast(0.5) * r * r)
    }
}

impl<T: Real> LogDensity<T> for GaussianTarget<T> {
    fn dim(&self) -> usize {
        self.scale.len()
    }

    fn log_prob(&self, z: &[T]) -> T {
        let mut acc = T::zero();
        for (&zi, &s) in z.iter().zip(&self.scale) {
            acc = acc + Self::term(zi, s);
        }
        acc
    }

    fn value_and_grad(&self, z: &[T], grad: &mut [T]) -> T {
        for ((g, &zi), &s) in grad.iter_mut().zip(z).zip(&self.scale) {
            *g = -(zi / (s * s));
        }
        self.log_prob(z)
    }

    fn log_prob_ratio(&self, z_new: &[T], z_old: &[T]) -> T {
        let mut acc = T::zero();
        for ((&a, &b), &s) in z_new.iter().zip(z_old).zip(&self.scale) {
            acc = acc + (Self::term(a, s) - Self::term(b, s));
        }
        acc
    }
}
