//! Finite-difference check of the joint RGCN loss gradient on a toy graph.
//!
//! `cargo run --release --example gradcheck -- [arch] [samples]`

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rgcn::graph::SparseGraph;
use rgcn::models::{build_model, gradcheck_model, Arch, ConvSpec, ModelSpec};
use rgcn::nncore::{GradcheckConfig, LabelSet};

fn main() -> rgcn::Result<()> {
    let mut args = std::env::args().skip(1);
    let arch = args.next().and_then(|s| Arch::parse(&s)).unwrap_or(Arch::RgcnRldae);
    let samples: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(200);
    let n = 6;
    let ring: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect();
    let views = if arch.is_multiview() { 2 } else { 1 };
    let graphs: Vec<SparseGraph> = (0..views)
        .map(|_| SparseGraph::from_edges(n, ring.clone()))
        .collect::<rgcn::Result<_>>()?;
    let spec = ModelSpec {
        arch,
        conv: vec![ConvSpec {
            feature_maps: 4,
            order: 3,
            pool: 2,
        }],
        fc: vec![5],
        ae_hidden: vec![4],
        eta: 0.5,
        batch_size: 4,
        ..ModelSpec::default()
    };
    let model = build_model(&spec, &graphs, 2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut random = || Array2::from_shape_simple_fn((4, n), || rng.random_range(-1.0..1.0));
    let inputs: Vec<Array2<f64>> = graphs.iter().map(|_| random()).collect();
    let targets: Vec<Array2<f64>> = graphs.iter().map(|_| random()).collect();
    let labels = LabelSet::new(vec![Some(0), Some(1), None, Some(1)], 2)?;
    let config = GradcheckConfig {
        samples,
        ..GradcheckConfig::default()
    };
    let report = gradcheck_model(&model, &inputs, &targets, Some(&labels), &config)?;
    println!(
        "{}: {} of {} parameters checked, max rel err {:.2e}, {} over tolerance",
        arch.name(),
        report.checked,
        model.num_params(),
        report.max_rel_err,
        report.failures.len()
    );
    Ok(())
}
