use std::error::Error as StdError;

use thiserror::Error;

use crate::diagnostics::DiagnosticsError;

/// Where trajectory lengths come from. Lockstep execution requires
/// [`JitterScope::Shared`]; `PerChain` exists so tests can show that the
/// lockstep check catches per-chain lengths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JitterScope {
    #[default]
    Shared,
    PerChain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HmcConfig {
    pub step_size: f64,
    pub num_leapfrog_steps: usize,
    pub jitter: bool,
    /// Diagonal mass; identity when absent.
    pub mass_diag: Option<Vec<f64>>,
    pub stable_ratio: bool,
    pub jitter_scope: JitterScope,
}

impl HmcConfig {
    pub fn new(step_size: f64, num_leapfrog_steps: usize) -> Self {
        HmcConfig {
            step_size,
            num_leapfrog_steps,
            jitter: false,
            mass_diag: None,
            stable_ratio: false,
            jitter_scope: JitterScope::Shared,
        }
    }

    pub fn with_jitter(mut self, jitter: bool) -> Self {
        self.jitter = jitter;
        self
    }

    pub fn with_mass(mut self, mass_diag: Vec<f64>) -> Self {
        self.mass_diag = Some(mass_diag);
        self
    }

    pub fn with_stable_ratio(mut self, stable_ratio: bool) -> Self {
        self.stable_ratio = stable_ratio;
        self
    }

    pub fn validate(&self, dim: usize) -> Result<(), SamplerError> {
        if !(self.step_size >= 0.0 && self.step_size.is_finite()) {
            return Err(SamplerError::InvalidConfig(format!(
                "step size must be finite and non-negative, got {}",
                self.step_size
            )));
        }
        if self.num_leapfrog_steps == 0 {
            return Err(SamplerError::InvalidConfig(
                "number of leapfrog steps must be at least 1".into(),
            ));
        }
        if let Some(mass) = &self.mass_diag {
            if mass.len() != dim {
                return Err(SamplerError::InvalidConfig(format!(
                    "mass has {} entries, target dimension is {dim}",
                    mass.len()
                )));
            }
            if let Some(m) = mass.iter().find(|m| !(**m > 0.0 && m.is_finite())) {
                return Err(SamplerError::InvalidConfig(format!(
                    "mass entries must be positive and finite, got {m}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),
    #[error("state has shape {found:?}, expected {expected:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("need at least one chain")]
    NoChains,
    #[error("initial state of chain {chain} is not finite or has zero density")]
    NonFiniteInit { chain: usize },
    #[error("lockstep violated: chain 0 takes {expected} leapfrog steps, chain {chain} takes {found}")]
    LockstepViolation {
        chain: usize,
        expected: usize,
        found: usize,
    },
    #[error("mass estimation needs at least {needed} draws per chain, got {found}")]
    InsufficientMoments { needed: u64, found: u64 },
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error("sample sink failed: {0}")]
    Sink(#[source] Box<dyn StdError + Send + Sync>),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(HmcConfig::new(0.1, 10).validate(3).is_ok());
        assert!(HmcConfig::new(0.0, 1).validate(3).is_ok());
        assert!(HmcConfig::new(-0.1, 10).validate(3).is_err());
        assert!(HmcConfig::new(f64::NAN, 10).validate(3).is_err());
        assert!(HmcConfig::new(0.1, 0).validate(3).is_err());
        assert!(HmcConfig::new(0.1, 1).with_mass(vec![1.0; 2]).validate(3).is_err());
        assert!(HmcConfig::new(0.1, 1).with_mass(vec![1.0, 0.0, 1.0]).validate(3).is_err());
        assert!(HmcConfig::new(0.1, 1).with_mass(vec![2.0; 3]).validate(3).is_ok());
    }
}
