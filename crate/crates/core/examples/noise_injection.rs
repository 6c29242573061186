//! Masking and Gaussian corruption of a small matrix.
//!
//! `cargo run --release --example noise_injection -- [level] [seed]`

use ndarray::Array2;

use rgcn::noise::NoiseSpec;

fn main() -> rgcn::Result<()> {
    let mut args = std::env::args().skip(1);
    let level: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.2);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let x = Array2::from_shape_fn((4, 10), |(i, j)| ((i + 1) * (j + 1)) as f64 / 40.0);

    let masked = NoiseSpec::masking(level, seed).apply(x.view())?;
    println!("masking level {level}: entries set to 10 per row");
    for row in masked.rows() {
        let line: Vec<String> = row.iter().map(|v| if *v == 10.0 { "  X ".into() } else { format!("{v:.2}") }).collect();
        println!("  {}", line.join(" "));
    }

    let shared = NoiseSpec {
        shared_columns: true,
        ..NoiseSpec::masking(level, seed)
    };
    let cols = |m: &Array2<f64>| -> Vec<usize> { (0..m.ncols()).filter(|&j| m[[0, j]] == 10.0).collect() };
    println!("shared columns: {:?}", cols(&shared.apply(x.view())?));

    let std = 0.01;
    let noisy = NoiseSpec::gaussian(std, seed).apply(x.view())?;
    let diff = &noisy - &x;
    let k = diff.len() as f64;
    let sample_std = (diff.iter().map(|v| v * v).sum::<f64>() / k).sqrt();
    println!("gaussian std {std}: sample std {sample_std:.4} over {k} entries");
    Ok(())
}
