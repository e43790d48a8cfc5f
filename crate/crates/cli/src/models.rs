use anyhow::Context;
use lockstep_hmc::model::{Dataset, GaussianTarget, LogDensity, SparseLogisticRegression};
use lockstep_hmc::{ChainMatrix, RandomKey, Real};

use crate::config::ModelSpec;
use crate::CliError;

/// A target ready to sample, with names for its coordinates.
pub struct LoadedModel<T: Real> {
    pub target: Box<dyn LogDensity<T>>,
    pub param_names: Vec<String>,
    /// Coordinate holding log τ, if the model has one.
    pub tau_index: Option<usize>,
}

impl<T: Real> LoadedModel<T> {
    pub fn dim(&self) -> usize {
        self.target.dim()
    }
}

/// Reads or synthesizes the data behind `spec`. Returns `None` for the
/// Gaussian harness, which has no data.
pub fn load_dataset(spec: &ModelSpec, data_seed: u64) -> Result<Option<Dataset>, CliError> {
    match spec {
        ModelSpec::GermanCredit(path) => {
            let data = Dataset::load_csv(path, true)
                .with_context(|| format!("loading {}", path.display()))?;
            Ok(Some(data))
        }
        ModelSpec::Synthetic { n, d, sparsity } => {
            let synth = Dataset::synthetic(RandomKey::from_seed(data_seed), *n, *d, *sparsity)
                .context("synthesizing data")?;
            Ok(Some(synth.dataset))
        }
        ModelSpec::Gaussian { .. } => Ok(None),
    }
}

pub fn sparse_param_names(d: usize) -> Vec<String> {
    let mut names = vec!["log_tau".to_string()];
    names.extend((0..d).map(|j| format!("log_lambda.{j}")));
    names.extend((0..d).map(|j| format!("beta.{j}")));
    names
}

pub fn sparse_model<T: Real>(data: &Dataset, replication: usize) -> Result<LoadedModel<T>, CliError> {
    let target = SparseLogisticRegression::<T>::new(data)
        .with_replication(replication)
        .context("building model")?;
    Ok(LoadedModel {
        target: Box::new(target),
        param_names: sparse_param_names(data.d()),
        tau_index: Some(0),
    })
}

pub fn load_model<T: Real>(spec: &ModelSpec, data_seed: u64) -> Result<LoadedModel<T>, CliError> {
    match spec {
        ModelSpec::Gaussian { dim } => Ok(LoadedModel {
            target: Box::new(GaussianTarget::<T>::standard(*dim)),
            param_names: (0..*dim).map(|i| format!("z.{i}")).collect(),
            tau_index: None,
        }),
        _ => {
            let data = load_dataset(spec, data_seed)?.expect("data-backed model");
            sparse_model(&data, 1)
        }
    }
}

/// Initial states drawn uniformly from `[-radius, radius]` in every
/// coordinate.
pub fn uniform_init<T: Real>(key: RandomKey, chains: usize, dim: usize, radius: f64) -> ChainMatrix<T> {
    let u = key.uniform(chains * dim);
    let mut z = ChainMatrix::zeros(chains, dim);
    for c in 0..chains {
        for p in 0..dim {
            z.set(c, p, T::cast(radius * (2.0 * u[c * dim + p] - 1.0)));
        }
    }
    z
}
