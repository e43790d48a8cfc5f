use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use lockstep_hmc::Precision;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Which posterior to sample.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    /// A CSV of numeric features with a final 0/1 label column.
    GermanCredit(PathBuf),
    Synthetic { n: usize, d: usize, sparsity: f64 },
    Gaussian { dim: usize },
}

impl FromStr for ModelSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, arg) = s
            .split_once(':')
            .ok_or_else(|| format!("model `{s}` should look like kind:arguments"))?;
        match kind {
            "german-credit" => {
                if arg.is_empty() {
                    return Err("german-credit needs a CSV path".into());
                }
                Ok(ModelSpec::GermanCredit(PathBuf::from(arg)))
            }
            "synthetic" => {
                let parts: Vec<&str> = arg.split(',').map(str::trim).collect();
                let [n, d, sparsity] = parts[..] else {
                    return Err(format!("synthetic expects N,D,SPARSITY, got `{arg}`"));
                };
                let n = n.parse().map_err(|_| format!("bad row count `{n}`"))?;
                let d = d.parse().map_err(|_| format!("bad feature count `{d}`"))?;
                let sparsity: f64 = sparsity
                    .parse()
                    .map_err(|_| format!("bad sparsity `{sparsity}`"))?;
                if n == 0 || d == 0 {
                    return Err("synthetic data needs at least one row and one feature".into());
                }
                if !(0.0..=1.0).contains(&sparsity) {
                    return Err(format!("sparsity must lie in [0, 1], got {sparsity}"));
                }
                Ok(ModelSpec::Synthetic { n, d, sparsity })
            }
            "gaussian" => {
                let dim: usize = arg.trim().parse().map_err(|_| format!("bad dimension `{arg}`"))?;
                if dim == 0 {
                    return Err("gaussian dimension must be at least 1".into());
                }
                Ok(ModelSpec::Gaussian { dim })
            }
            other => Err(format!(
                "unknown model `{other}` (expected german-credit, synthetic or gaussian)"
            )),
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::GermanCredit(p) => write!(f, "german-credit:{}", p.display()),
            ModelSpec::Synthetic { n, d, sparsity } => write!(f, "synthetic:{n},{d},{sparsity}"),
            ModelSpec::Gaussian { dim } => write!(f, "gaussian:{dim}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Retention {
    Full,
    MomentsOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub chains: usize,
    pub draws: usize,
    pub warmup: usize,
    pub step_size: f64,
    pub leapfrog_steps: usize,
    pub jitter: bool,
    pub precision: Precision,
    pub stable_ratio: bool,
    pub adapt: bool,
    pub seed: u64,
    pub data_seed: u64,
    pub output: Option<PathBuf>,
    pub retention: Retention,
    pub threads: Option<usize>,
    pub init_radius: f64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        if self.chains == 0 {
            return usage("--chains must be at least 1".into());
        }
        if self.draws == 0 {
            return usage("--draws must be at least 1".into());
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return usage(format!("--step-size must be positive, got {}", self.step_size));
        }
        if self.leapfrog_steps == 0 {
            return usage("--leapfrog-steps must be at least 1".into());
        }
        if !(self.init_radius >= 0.0 && self.init_radius.is_finite()) {
            return usage(format!("--init-radius must be non-negative, got {}", self.init_radius));
        }
        if self.threads == Some(0) {
            return usage("--threads must be at least 1".into());
        }
        if self.retention == Retention::Full && self.draws < 4 {
            // Not an error: diagnostics just come back empty.
        }
        Ok(())
    }
}
