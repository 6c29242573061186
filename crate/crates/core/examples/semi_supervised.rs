//! GCN trained with only a fraction of the training labels kept.
//!
//! `cargo run --release --example semi_supervised -- [fraction ...]`

use rgcn::data::{synth_classification, SynthConfig};
use rgcn::models::{build_model, train_rgcn, EvalSplit, ModelSpec};

fn main() -> rgcn::Result<()> {
    env_logger::init();
    let fractions: Vec<f64> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let fractions = if fractions.is_empty() { vec![1.0, 0.25, 0.05] } else { fractions };
    let task = synth_classification(&SynthConfig::default(), None)?;
    println!("fraction labeled test_accuracy");
    for fraction in fractions {
        let ds = task.dataset.semi_supervised(fraction, 1)?;
        let labels = ds.train_labels()?;
        let mut model = build_model(&ModelSpec::default(), &[task.graph.clone()], 2)?;
        let test_x = ds.test_x();
        let test_l = ds.test_labels()?;
        let views = [test_x.view()];
        let split = EvalSplit {
            xs: &views,
            labels: &test_l,
        };
        let report = train_rgcn(&mut model, ds.train_x().view(), &labels, Some(split))?;
        println!(
            "{fraction:<8} {:<7} {:.3}",
            labels.num_labeled(),
            report.final_test_accuracy().unwrap_or(0.0)
        );
    }
    Ok(())
}
