use ndarray::{Array2, ArrayView2};

use super::spec::Fusion;
use crate::error::{invalid_data, Result};

fn check(features: &[ArrayView2<f64>]) -> Result<(usize, usize)> {
    let Some(first) = features.first() else {
        return invalid_data("fusion needs at least one view");
    };
    let dim = first.dim();
    if features.iter().any(|f| f.dim() != dim) {
        return invalid_data("fused views differ in shape");
    }
    Ok(dim)
}

/// Elementwise max, mean, or `max + beta * mean` of per-view features.
pub fn fuse_views(features: &[ArrayView2<f64>], fusion: Fusion) -> Result<Array2<f64>> {
    let dim = check(features)?;
    let v = features.len() as f64;
    let mut max = features[0].to_owned();
    let mut sum = features[0].to_owned();
    for f in &features[1..] {
        max.zip_mut_with(f, |m, &x| *m = m.max(x));
        sum += f;
    }
    debug_assert_eq!(max.dim(), dim);
    Ok(match fusion {
        Fusion::Max => max,
        Fusion::Avg => sum / v,
        Fusion::Mixed(beta) => max + &(sum * (beta / v)),
    })
}

/// Per-view gradients of [`fuse_views`]. Max gradients go to the first
/// view attaining the maximum.
pub fn fuse_views_backward(
    features: &[ArrayView2<f64>],
    fusion: Fusion,
    grad: ArrayView2<f64>,
) -> Result<Vec<Array2<f64>>> {
    let dim = check(features)?;
    if grad.dim() != dim {
        return invalid_data("fusion gradient shape differs from the views");
    }
    let v = features.len();
    let (max_weight, avg_weight) = match fusion {
        Fusion::Max => (1.0, 0.0),
        Fusion::Avg => (0.0, 1.0 / v as f64),
        Fusion::Mixed(beta) => (1.0, beta / v as f64),
    };
    let mut out: Vec<Array2<f64>> = (0..v).map(|_| &grad * avg_weight).collect();
    if max_weight != 0.0 {
        for r in 0..dim.0 {
            for c in 0..dim.1 {
                let mut best = 0;
                for k in 1..v {
                    if features[k][[r, c]] > features[best][[r, c]] {
                        best = k;
                    }
                }
                out[best][[r, c]] += max_weight * grad[[r, c]];
            }
        }
    }
    Ok(out)
}
