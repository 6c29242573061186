//! Sweeps lambda for a robust linear autoencoder on a planted rank-r plus
//! sparse-spike matrix and reports how well each split recovers the parts.
//!
//! `cargo run --release --example rpca_recovery -- [hidden] [lr] [inner] [outer]`

use rgcn::autoencoder::{recovery_scores, rlae_fit, AeSpec, AeTrainConfig, Autoencoder, RlaeConfig};
use rgcn::data::synth_lowrank_sparse;
use rgcn::nncore::{Activation, AdamConfig};

fn main() -> rgcn::Result<()> {
    env_logger::init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: f64| args.get(i).and_then(|s| s.parse().ok()).unwrap_or(default);
    let hidden = arg(0, 1.0) as usize;
    let lr = arg(1, 0.01);
    let inner = arg(2, 200.0) as usize;
    let outer = arg(3, 30.0) as usize;

    let fixture = synth_lowrank_sparse(20, 20, 1, 0.05, 10.0, 0)?;
    println!("lambda  f1     l_rel_err  residual   iters");
    for lambda in [0.25, 0.5, 1.0, 2.0, 3.0, 5.0] {
        let mut ae = Autoencoder::new(AeSpec::mirrored(20, &[hidden], Activation::Identity, 0))?;
        let config = RlaeConfig {
            lambda,
            lambda_decay: 1.0,
            tol: 1e-6,
            max_outer: outer,
            inner_epochs: inner,
            train: AeTrainConfig {
                batch_size: 20,
                adam: AdamConfig {
                    lr,
                    lr_decay: 1.0,
                    l2: 0.0,
                    ..AdamConfig::default()
                },
                ..AeTrainConfig::default()
            },
        };
        let d = rlae_fit(&mut ae, fixture.x.view(), &config)?;
        let (f1, rel) = recovery_scores(&d, fixture.l0.view(), fixture.e0.view())?;
        println!("{lambda:<7} {f1:.3}  {rel:.3e}  {:.3e}  {}", d.residual, d.outer_iters);
    }
    Ok(())
}
