//! Multi-chain Hamiltonian Monte Carlo built around lockstep execution.
//!
//! All chains advance together: the state of `C` chains over `P` parameters
//! lives in one structure-of-arrays [`ChainMatrix`], every chain takes the
//! same number of leapfrog steps in a given iteration, and the log-density
//! kernels evaluate blocks of chains at once so the inner loops run across
//! chains.
//!
//! The crate is organised as:
//!
//! * [`prng`]: counter-based splittable random keys.
//! * [`model`]: the sparse Bayesian logistic-regression target, a Gaussian
//!   harness target, and dataset loading/synthesis.
//! * [`gradients`]: value-and-gradient evaluation plus a finite-difference
//!   oracle.
//! * [`sampler`]: leapfrog integration, the HMC transition, trajectory
//!   jitter, warmup adaptation and the multi-chain driver.
//! * [`diagnostics`]: Welford moments, split-R̂, ESS, ESJD, ChEES and the
//!   roundoff detector.
//!
//! Everything is generic over [`Real`], so the same sampler runs in single
//! or double precision.

pub mod chains;
pub mod diagnostics;
pub mod gradients;
pub mod model;
pub mod prng;
mod real;
pub mod sampler;

pub use chains::ChainMatrix;
pub use prng::RandomKey;
pub use real::{Precision, Real};
