//! Deep autoencoders: plain reconstruction, denoising, and the robust
//! low-rank decomposition `X = L + E` with a sparse error `E`.

mod network;
mod robust;
mod train;

pub use network::{ae_forward, reconstruction_loss, AeCache, AeGrads, AeSpec, Autoencoder};
pub use robust::{
    lambda_grid, prox_l1, recovery_scores, relative_residual, rlae_fit, Decomposition, RlaeConfig, RlaeState,
};
pub use train::{ae_train, dae_train, AeTrainConfig, AeTrainer};
