use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradcheckConfig {
    /// Central-difference step.
    pub h: f64,
    /// Maximum accepted relative error.
    pub tolerance: f64,
    /// Coordinates to probe; all of them when the parameter vector is shorter.
    pub samples: usize,
    /// Denominator floor so that near-zero gradients are compared absolutely.
    pub abs_floor: f64,
    pub seed: u64,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        Self {
            h: 1e-5,
            tolerance: 1e-4,
            samples: 200,
            abs_floor: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateMismatch {
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub checked: usize,
    pub max_rel_err: f64,
    pub failures: Vec<CoordinateMismatch>,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Compares `analytic` against central differences of `loss` around `params`.
pub fn gradcheck<F>(mut loss: F, params: &[f64], analytic: &[f64], config: &GradcheckConfig) -> GradcheckReport
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(params.len(), analytic.len(), "gradient length must match parameters");
    let coords: Vec<usize> = if params.len() <= config.samples {
        (0..params.len()).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut idx = rand::seq::index::sample(&mut rng, params.len(), config.samples).into_vec();
        idx.sort_unstable();
        idx
    };
    let mut probe = params.to_vec();
    let mut max_rel_err: f64 = 0.0;
    let mut failures = Vec::new();
    for &i in &coords {
        let orig = probe[i];
        probe[i] = orig + config.h;
        let up = loss(&probe);
        probe[i] = orig - config.h;
        let down = loss(&probe);
        probe[i] = orig;
        let numeric = (up - down) / (2.0 * config.h);
        let a = analytic[i];
        let denom = a.abs().max(numeric.abs()).max(config.abs_floor);
        let rel_err = (a - numeric).abs() / denom;
        let rel_err = if rel_err.is_nan() { f64::INFINITY } else { rel_err };
        max_rel_err = max_rel_err.max(rel_err);
        if rel_err > config.tolerance {
            failures.push(CoordinateMismatch {
                index: i,
                analytic: a,
                numeric,
                rel_err,
            });
        }
    }
    GradcheckReport {
        checked: coords.len(),
        max_rel_err,
        failures,
    }
}
