use ndarray::{ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::network::{reconstruction_loss, Autoencoder};
use crate::error::{invalid_param, Error, Result};
use crate::nncore::{shuffled_batches, Adam, AdamConfig};
use crate::noise::NoiseSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AeTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub shuffle_seed: u64,
}

impl Default for AeTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 100,
            adam: AdamConfig {
                lr_decay: 1.0,
                l2: 0.0,
                ..AdamConfig::default()
            },
            shuffle_seed: 0,
        }
    }
}

/// Resumable mini-batch trainer: ADAM moments, the shuffling stream and the
/// epoch counter survive across calls.
#[derive(Debug, Clone)]
pub struct AeTrainer {
    config: AeTrainConfig,
    adam: Adam,
    shuffle_rng: ChaCha8Rng,
    noise_rng: ChaCha8Rng,
    epoch: usize,
}

impl AeTrainer {
    pub fn new(config: AeTrainConfig) -> Result<Self> {
        if config.batch_size == 0 {
            return invalid_param("batch size must be positive");
        }
        Ok(Self {
            adam: Adam::new(config.adam)?,
            shuffle_rng: ChaCha8Rng::seed_from_u64(config.shuffle_seed),
            noise_rng: ChaCha8Rng::seed_from_u64(config.shuffle_seed ^ 0x6e6f_6973_65),
            config,
            epoch: 0,
        })
    }

    pub fn epochs_run(&self) -> usize {
        self.epoch
    }

    /// Runs `epochs` epochs reconstructing `target` from `input` (optionally
    /// corrupted per batch) and returns the row-averaged loss of each epoch.
    pub fn train(
        &mut self,
        ae: &mut Autoencoder,
        input: ArrayView2<f64>,
        target: ArrayView2<f64>,
        corruption: Option<&NoiseSpec>,
        epochs: usize,
    ) -> Result<Vec<f64>> {
        let n = input.nrows();
        if target.dim() != input.dim() {
            return invalid_param("autoencoder input and target shapes differ");
        }
        if n < self.config.batch_size {
            return invalid_param(format!(
                "{n} samples is fewer than the batch size {}",
                self.config.batch_size
            ));
        }
        let mut history = Vec::with_capacity(epochs);
        for _ in 0..epochs {
            let mut total = 0.0;
            for rows in shuffled_batches(&mut self.shuffle_rng, n, self.config.batch_size) {
                let clean = target.select(Axis(0), &rows);
                let mut batch = input.select(Axis(0), &rows);
                if let Some(spec) = corruption {
                    batch = spec.with_seed(self.noise_rng.random()).apply(batch.view())?;
                }
                let cache = ae.forward_cached(batch.view())?;
                let (loss, grad) = reconstruction_loss(cache.output().view(), clean.view());
                if !loss.is_finite() {
                    return Err(Error::Diverged {
                        epoch: self.epoch,
                        detail: "non-finite reconstruction loss".into(),
                    });
                }
                total += loss * rows.len() as f64;
                if !ae.spec.frozen {
                    let grads = ae.backward(&cache, grad.view())?;
                    self.adam.step(&mut ae.param_slices_mut(), &grads.slices(), self.epoch)?;
                }
            }
            history.push(total / n as f64);
            self.epoch += 1;
        }
        Ok(history)
    }
}

/// Trains `ae` to reproduce `x`; returns the per-epoch mean loss.
pub fn ae_train(ae: &mut Autoencoder, x: ArrayView2<f64>, config: &AeTrainConfig) -> Result<Vec<f64>> {
    AeTrainer::new(*config)?.train(ae, x, x, None, config.epochs)
}

/// Trains `ae` to recover `x_clean` from freshly corrupted copies of each
/// mini-batch.
pub fn dae_train(
    ae: &mut Autoencoder,
    x_clean: ArrayView2<f64>,
    corruption: &NoiseSpec,
    config: &AeTrainConfig,
) -> Result<Vec<f64>> {
    corruption.validate()?;
    AeTrainer::new(*config)?.train(ae, x_clean, x_clean, Some(corruption), config.epochs)
}
