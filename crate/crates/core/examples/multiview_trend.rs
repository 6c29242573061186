//! Best single view vs fused MVGCN on clean data, and MVGCN vs MVRGCN
//! (RLDAE) with masked training rows, on a two-view synthetic task.
//!
//! `cargo run --release --example multiview_trend -- [seeds] [spread] [key=value ...]`

use rgcn::data::{synth_multiview, MultiViewDataset, SynthConfig};
use rgcn::models::{build_model, train_mvrgcn, Arch, EvalSplit, ModelSpec};
use rgcn::graph::SparseGraph;
use rgcn::noise::NoiseSpec;

fn accuracy(spec: &ModelSpec, data: &MultiViewDataset, graphs: &[SparseGraph], views: &[usize]) -> rgcn::Result<f64> {
    let graphs: Vec<SparseGraph> = views.iter().map(|&v| graphs[v].clone()).collect();
    let mut model = build_model(spec, &graphs, 2)?;
    let train: Vec<_> = views.iter().map(|&v| data.views[v].train_x()).collect();
    let test: Vec<_> = views.iter().map(|&v| data.views[v].test_x()).collect();
    let train_v: Vec<_> = train.iter().map(|x| x.view()).collect();
    let test_v: Vec<_> = test.iter().map(|x| x.view()).collect();
    let first = &data.views[views[0]];
    let test_l = first.test_labels()?;
    let split = EvalSplit { xs: &test_v, labels: &test_l };
    let report = train_mvrgcn(&mut model, &train_v, &first.train_labels()?, Some(split))?;
    Ok(report.final_test_accuracy().unwrap_or(0.0))
}

fn main() -> rgcn::Result<()> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let seeds: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(5);
    let spread: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(3.0);
    let mut spec = ModelSpec::default();
    for kv in args {
        let (k, v) = kv.split_once('=').expect("key=value");
        spec.set(k, v)?;
    }
    println!("seed view0 view1 mvgcn mvgcn_noisy mvrgcn_noisy");
    for seed in 0..seeds {
        let cfg = SynthConfig {
            seed,
            graph_seed: seed,
            spread,
            min_oracle_accuracy: 0.0,
            ..SynthConfig::default()
        };
        let (clean, graphs) = synth_multiview(&cfg, 2)?;
        let noisy = clean.with_noisy_train(&NoiseSpec::masking(0.4, seed))?;
        let single = ModelSpec { arch: Arch::Gcn, seed, ..spec.clone() };
        let mv = ModelSpec { arch: Arch::Mvgcn, seed, ..spec.clone() };
        let mvr = ModelSpec { arch: Arch::MvrgcnRldae, seed, ..spec.clone() };
        println!(
            "{seed} {:.3} {:.3} {:.3} {:.3} {:.3}",
            accuracy(&single, &clean, &graphs, &[0])?,
            accuracy(&single, &clean, &graphs, &[1])?,
            accuracy(&mv, &clean, &graphs, &[0, 1])?,
            accuracy(&mv, &noisy, &graphs, &[0, 1])?,
            accuracy(&mvr, &noisy, &graphs, &[0, 1])?
        );
    }
    Ok(())
}
