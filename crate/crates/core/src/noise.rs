//! Masking and Gaussian corruption of data matrices.

use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{invalid_param, Result};

/// Default fill value for masking noise.
pub const MASK_VALUE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    Masking,
    Gaussian,
}

impl NoiseKind {
    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Masking => "masking",
            NoiseKind::Gaussian => "gaussian",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "masking" => Some(NoiseKind::Masking),
            "gaussian" => Some(NoiseKind::Gaussian),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// Masked fraction of features, or the Gaussian standard deviation.
    pub level: f64,
    /// Fill value for masked entries.
    pub val: f64,
    pub seed: u64,
    /// Masking only: corrupt the same feature columns in every row.
    pub shared_columns: bool,
}

impl NoiseSpec {
    pub fn masking(level: f64, seed: u64) -> Self {
        Self {
            kind: NoiseKind::Masking,
            level,
            val: MASK_VALUE,
            seed,
            shared_columns: false,
        }
    }

    pub fn gaussian(std: f64, seed: u64) -> Self {
        Self {
            kind: NoiseKind::Gaussian,
            level: std,
            val: MASK_VALUE,
            seed,
            shared_columns: false,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            NoiseKind::Masking if !(0.0..=1.0).contains(&self.level) => {
                invalid_param(format!("masking level must lie in [0, 1], got {}", self.level))
            }
            NoiseKind::Gaussian if !(self.level >= 0.0 && self.level.is_finite()) => {
                invalid_param(format!("gaussian level must be non-negative, got {}", self.level))
            }
            _ if !self.val.is_finite() => invalid_param("mask value must be finite"),
            _ => Ok(()),
        }
    }

    /// Applies whichever corruption `kind` selects.
    pub fn apply(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        match self.kind {
            NoiseKind::Masking => masking_noise(x, self),
            NoiseKind::Gaussian => gaussian_noise(x, self),
        }
    }
}

/// Sets `floor(level * M)` entries per row to `val`.
///
/// The entries are drawn without replacement, independently per row unless
/// `shared_columns` is set.
pub fn masking_noise(x: ArrayView2<f64>, spec: &NoiseSpec) -> Result<Array2<f64>> {
    if spec.kind != NoiseKind::Masking {
        return invalid_param("masking_noise called with a non-masking spec");
    }
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = x.to_owned();
    let (n, m) = x.dim();
    let count = (spec.level * m as f64).floor() as usize;
    if count == 0 {
        return Ok(out);
    }
    let shared = spec
        .shared_columns
        .then(|| rand::seq::index::sample(&mut rng, m, count).into_vec());
    for r in 0..n {
        let cols = match &shared {
            Some(cols) => cols.clone(),
            None => rand::seq::index::sample(&mut rng, m, count).into_vec(),
        };
        for c in cols {
            out[[r, c]] = spec.val;
        }
    }
    Ok(out)
}

/// Adds i.i.d. `Normal(0, level^2)` noise. The noise field depends only on
/// the seed and the shape.
pub fn gaussian_noise(x: ArrayView2<f64>, spec: &NoiseSpec) -> Result<Array2<f64>> {
    if spec.kind != NoiseKind::Gaussian {
        return invalid_param("gaussian_noise called with a non-gaussian spec");
    }
    spec.validate()?;
    let mut out = x.to_owned();
    if spec.level == 0.0 {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = Normal::new(0.0, spec.level).expect("validated std");
    for v in out.iter_mut() {
        *v += normal.sample(&mut rng);
    }
    Ok(out)
}
