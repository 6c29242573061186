//! Low-pass Chebyshev filtering of a noisy signal on a pixel grid, checked
//! against the dense eigendecomposition.
//!
//! `cargo run --release --example spectral_filter -- [order]`

use ndarray::Array3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rgcn::graph::{
    estimate_lambda_max, grid_graph, normalized_laplacian, rescale_laplacian, Laplacian, LAMBDA_MAX_ITERS,
    LAMBDA_MAX_TOL,
};
use rgcn::spectral::{cheb_basis, cheb_conv_forward, dense_spectral_oracle, ChebParams, SignalBatch};

/// `x^T L x`, the roughness of a signal on the graph.
fn dirichlet_energy(l: &Laplacian, x: &[f64]) -> f64 {
    let mut lx = vec![0.0; x.len()];
    l.matvec(x, &mut lx);
    x.iter().zip(&lx).map(|(a, b)| a * b).sum()
}

fn main() -> rgcn::Result<()> {
    let order: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(8);
    let (h, w) = (8, 8);
    let g = grid_graph(h, w, 8)?;
    let l = normalized_laplacian(&g);
    let lambda = estimate_lambda_max(&l, LAMBDA_MAX_ITERS, LAMBDA_MAX_TOL);
    let l_hat = rescale_laplacian(&l, lambda)?;

    // smooth ramp plus white noise
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let x = Array3::from_shape_fn((1, h * w, 1), |(_, v, _)| (v % w) as f64 / w as f64 + 0.3 * rng.random_range(-1.0..1.0));
    let x = SignalBatch::new(x);

    // Chebyshev coefficients of exp(-3 (t + 1)) by Gauss-Chebyshev quadrature
    let nodes = 64;
    let theta = Array3::from_shape_fn((order, 1, 1), |(p, _, _)| {
        let sum: f64 = (0..nodes)
            .map(|k| {
                let a = std::f64::consts::PI * (k as f64 + 0.5) / nodes as f64;
                (-3.0 * (a.cos() + 1.0)).exp() * (p as f64 * a).cos()
            })
            .sum();
        sum * if p == 0 { 1.0 } else { 2.0 } / nodes as f64
    });
    let params = ChebParams::new(theta)?;
    let y = cheb_conv_forward(&cheb_basis(&l_hat, &x, order)?, &params)?;
    let want = dense_spectral_oracle(&l, lambda, &params, &x)?;
    let err = y.data.iter().zip(&want.data).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));

    let xs: Vec<f64> = x.data.iter().copied().collect();
    let ys: Vec<f64> = y.data.iter().copied().collect();
    println!("lambda_max estimate {lambda:.4}");
    println!("energy before {:.4} after {:.4}", dirichlet_energy(&l, &xs), dirichlet_energy(&l, &ys));
    println!("max deviation from dense oracle {err:.2e}");
    Ok(())
}
