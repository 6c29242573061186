//! Robust graph convolutional networks.
//!
//! Spectral graph convolution with Chebyshev filters, composed with robust
//! autoencoders that split possibly corrupted inputs into a low-rank clean
//! component and a sparse error component before classification.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`graph`] | kNN / grid feature graphs, normalized and rescaled Laplacians, heavy-edge coarsening |
//! | [`spectral`] | Chebyshev basis, graph convolution forward/backward, dense eigen oracle, graph max-pooling |
//! | [`autoencoder`] | deep autoencoders, denoising training, `prox_l1`, robust low-rank decomposition |
//! | [`nncore`] | dense layers, masked softmax cross-entropy, ADAM, finite-difference gradient checks |
//! | [`models`] | single-view and multi-view RGCN architectures, training, evaluation, checkpoints |
//! | [`noise`] | masking and Gaussian corruption |
//! | [`data`] | bag-of-words / TF-IDF pipelines, synthetic generators, DMAT / CSV / label files |
//! | [`cli`] | the `rgcn` command-line driver |
//!
//! Every numerical path has an independent check in the test suite: the
//! Chebyshev recurrence against a dense eigendecomposition, analytic gradients
//! against central differences, and the robust decomposition against a planted
//! low-rank plus sparse ground truth.

pub mod autoencoder;
pub mod cli;
pub mod data;
mod error;
pub mod graph;
pub mod models;
pub mod nncore;
pub mod noise;
pub mod spectral;

pub use error::{Error, Result};
