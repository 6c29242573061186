//! Minimal neural-network substrate: dense layers, masked softmax
//! cross-entropy, ADAM and finite-difference gradient checks.

mod adam;
mod dense;
mod gradcheck;
mod loss;

pub use adam::{Adam, AdamConfig};
pub use dense::{dense_forward_backward, Activation, DenseGrads, DenseLayer};
pub use gradcheck::{gradcheck, CoordinateMismatch, GradcheckConfig, GradcheckReport};
pub use loss::{softmax_xent, LabelSet};

use rand::Rng;

/// Uniform `(-1/sqrt(fan_in), 1/sqrt(fan_in))` initializer.
pub(crate) fn scaled_uniform<R: Rng>(rng: &mut R, fan_in: usize) -> f64 {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    rng.random_range(-bound..bound)
}

/// A fresh permutation of `0..n` cut into batches of at most `batch` rows.
pub fn shuffled_batches<R: Rng>(rng: &mut R, n: usize, batch: usize) -> Vec<Vec<usize>> {
    use rand::seq::SliceRandom;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order.chunks(batch.max(1)).map(<[usize]>::to_vec).collect()
}
