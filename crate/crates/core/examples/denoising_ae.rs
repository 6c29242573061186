//! Denoising autoencoder vs a plain autoencoder trained on corrupted rows,
//! both scored on reconstructing clean held-out rows from masked copies.
//!
//! `cargo run --release --example denoising_ae -- [level] [epochs]`

use ndarray::{s, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rgcn::autoencoder::{ae_forward, ae_train, dae_train, AeSpec, AeTrainConfig, Autoencoder};
use rgcn::nncore::{Activation, AdamConfig};
use rgcn::noise::NoiseSpec;

fn main() -> rgcn::Result<()> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let level: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.2);
    let epochs: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(150);
    let m = 20;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let u: Vec<f64> = (0..300).map(|_| rng.random_range(0.5..1.5)).collect();
    let v: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
    let clean = Array2::from_shape_fn((300, m), |(i, j)| u[i] * v[j]);
    let (train, test) = (clean.slice(s![..200, ..]), clean.slice(s![200.., ..]));

    let config = AeTrainConfig {
        epochs,
        batch_size: 20,
        adam: AdamConfig {
            lr: 0.005,
            lr_decay: 1.0,
            ..AdamConfig::default()
        },
        shuffle_seed: 3,
    };
    let spec = AeSpec::mirrored(m, &[6], Activation::Sigmoid, 12);
    let mut dae = Autoencoder::new(spec.clone())?;
    let dae_loss = dae_train(&mut dae, train, &NoiseSpec::masking(level, 13), &config)?;
    let mut ae = Autoencoder::new(spec)?;
    let corrupted = NoiseSpec::masking(level, 14).apply(train)?;
    let ae_loss = ae_train(&mut ae, corrupted.view(), &config)?;

    let test_in = NoiseSpec::masking(level, 15).apply(test)?;
    let norm = test.iter().map(|x| x * x).sum::<f64>().sqrt();
    let err = |net: &Autoencoder| -> rgcn::Result<f64> {
        let out = ae_forward(net, test_in.view())?;
        Ok((&out - &test).iter().map(|x| x * x).sum::<f64>().sqrt() / norm)
    };
    println!("final training loss: denoising {:.4}, plain {:.4}", dae_loss.last().unwrap(), ae_loss.last().unwrap());
    println!("relative error on clean test rows: denoising {:.4}, plain {:.4}", err(&dae)?, err(&ae)?);
    Ok(())
}
