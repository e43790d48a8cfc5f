use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::Float;
use serde::{Deserialize, Serialize};

/// Floating-point width a sampler runs in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Single,
    Double,
}

impl Precision {
    pub fn as_str(self) -> &'static str {
        match self {
            Precision::Single => "single",
            Precision::Double => "double",
        }
    }
}

impl std::str::FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" | "f32" => Ok(Precision::Single),
            "double" | "f64" => Ok(Precision::Double),
            other => Err(format!("unknown precision '{other}' (expected single or double)")),
        }
    }
}

/// Scalar type the sampler and models are generic over (`f32` or `f64`).
pub trait Real:
    Float + Sum + Default + Debug + Display + Send + Sync + 'static
{
    const PRECISION: Precision;

    /// Rounds an `f64` to this precision.
    fn cast(x: f64) -> Self;

    /// Exact conversion to `f64`.
    fn widen(self) -> f64;
}

impl Real for f32 {
    const PRECISION: Precision = Precision::Single;

    #[inline(always)]
    fn cast(x: f64) -> Self {
        x as f32
    }

    #[inline(always)]
    fn widen(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    const PRECISION: Precision = Precision::Double;

    #[inline(always)]
    fn cast(x: f64) -> Self {
        x
    }

    #[inline(always)]
    fn widen(self) -> f64 {
        self
    }
}
