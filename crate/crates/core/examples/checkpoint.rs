//! Trains a small RGCN, writes a checkpoint, reloads it and checks that the
//! predictions survive the round trip.
//!
//! `cargo run --release --example checkpoint -- [path]`

use rgcn::data::{synth_classification, SynthConfig};
use rgcn::models::{build_model, load_checkpoint, save_checkpoint, train_rgcn, Arch, ModelSpec};

fn main() -> rgcn::Result<()> {
    env_logger::init();
    let path = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("rgcn_example.ckpt"));
    let task = synth_classification(&SynthConfig::default(), None)?;
    let ds = &task.dataset;
    let spec = ModelSpec {
        arch: Arch::RgcnRldae,
        epochs: 5,
        ..ModelSpec::default()
    };
    let mut model = build_model(&spec, &[task.graph.clone()], 2)?;
    train_rgcn(&mut model, ds.train_x().view(), &ds.train_labels()?, None)?;
    save_checkpoint(&model, &path)?;
    let size = std::fs::metadata(&path)?.len();

    let restored = load_checkpoint(&path)?.into_model(&[task.graph.clone()])?;
    let test_x = ds.test_x();
    let before = model.predict(&[test_x.view()])?;
    let after = restored.predict(&[test_x.view()])?;
    println!("wrote {} ({size} bytes, {} parameters)", path.display(), model.num_params());
    println!("predictions identical after reload: {}", before == after);
    Ok(())
}
