//! Clean vs masked accuracy of GCN and RGCN (RLDAE) on the synthetic task.
//!
//! `cargo run --release --example robustness_trend -- [lo..hi] [key=value ...]`
//!
//! Keys are model keys plus `amplitude` and `spread` of the generator.

use rgcn::data::{synth_classification, SynthConfig};
use rgcn::models::{build_model, train_rgcn, Arch, EvalSplit, ModelSpec};
use rgcn::noise::NoiseSpec;

fn accuracy(spec: &ModelSpec, task: &rgcn::data::SyntheticTask) -> rgcn::Result<f64> {
    let ds = &task.dataset;
    let mut model = build_model(spec, &[task.graph.clone()], 2)?;
    let test_x = ds.test_x();
    let test_l = ds.test_labels()?;
    let views = [test_x.view()];
    let split = EvalSplit { xs: &views, labels: &test_l };
    let report = train_rgcn(&mut model, ds.train_x().view(), &ds.train_labels()?, Some(split))?;
    Ok(report.final_test_accuracy().unwrap_or(0.0))
}

fn main() -> rgcn::Result<()> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let seeds = args.next().unwrap_or_else(|| "0..5".into());
    let (lo, hi) = seeds.split_once("..").expect("seed range lo..hi");
    let seeds: std::ops::Range<u64> = lo.parse().expect("seed")..hi.parse().expect("seed");
    let mut spec = ModelSpec {
        epochs: 20,
        ..ModelSpec::default()
    };
    let mut synth = SynthConfig::default();
    for kv in args {
        let (k, v) = kv.split_once('=').expect("key=value");
        match k {
            "amplitude" => synth.amplitude = v.parse().expect("amplitude"),
            "spread" => synth.spread = v.parse().expect("spread"),
            _ => spec.set(k, v)?,
        }
    }
    println!("seed gcn_clean gcn_noisy rgcn_clean rgcn_noisy");
    for seed in seeds {
        let cfg = SynthConfig {
            seed,
            graph_seed: seed,
            ..synth.clone()
        };
        let clean = synth_classification(&cfg, None)?;
        let noisy = synth_classification(&cfg, Some(&NoiseSpec::masking(0.4, seed)))?;
        let base = ModelSpec { seed, ..spec.clone() };
        let gcn = ModelSpec { arch: Arch::Gcn, ..base.clone() };
        let rgcn = ModelSpec { arch: Arch::RgcnRldae, ..base };
        println!(
            "{seed} {:.3} {:.3} {:.3} {:.3}",
            accuracy(&gcn, &clean)?,
            accuracy(&gcn, &noisy)?,
            accuracy(&rgcn, &clean)?,
            accuracy(&rgcn, &noisy)?
        );
    }
    Ok(())
}
