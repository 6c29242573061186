use ndarray::{Array2, ArrayView2};

use super::SparseGraph;
use crate::error::{invalid_data, invalid_param, Result};

/// Distance used to rank neighbors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// Ranked by euclidean distance, weighted `exp(-d^2 / sigma^2)`.
    Euclidean,
    /// Ranked by `1 - cos`, weighted by the cosine similarity clamped to `[0, 1]`.
    Cosine,
}

/// Kernel width for euclidean weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sigma {
    /// `sigma^2` is the mean squared distance over all retained kNN pairs.
    Auto,
    Fixed(f64),
}

/// Symmetrized k-nearest-neighbor graph over the rows of `points`.
///
/// Ties in distance go to the smaller vertex index. After symmetrization
/// (`w <- max(w, w^T)`) a vertex may have more than `k` neighbors.
pub fn knn_graph(points: ArrayView2<f64>, k: usize, metric: Metric, sigma: Sigma) -> Result<SparseGraph> {
    let n = points.nrows();
    if k == 0 {
        return invalid_param("k must be positive");
    }
    if k >= n {
        return invalid_param(format!("k = {k} requires at least {} points, got {n}", k + 1));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return invalid_data("points contain non-finite values");
    }
    if let Sigma::Fixed(s) = sigma {
        if !(s > 0.0 && s.is_finite()) {
            return invalid_param(format!("sigma must be positive, got {s}"));
        }
    }

    let dist = pairwise_distances(points, metric);
    let mut chosen: Vec<(usize, usize, f64)> = Vec::with_capacity(n * k);
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        order.clear();
        order.extend((0..n).filter(|&j| j != i));
        order.sort_by(|&a, &b| dist[[i, a]].total_cmp(&dist[[i, b]]).then(a.cmp(&b)));
        chosen.extend(order[..k].iter().map(|&j| (i, j, dist[[i, j]])));
    }

    let weights: Vec<(usize, usize, f64)> = match metric {
        Metric::Euclidean => {
            let sigma2 = match sigma {
                Sigma::Fixed(s) => s * s,
                Sigma::Auto => {
                    let mean =
                        chosen.iter().map(|&(_, _, d)| d * d).sum::<f64>() / chosen.len() as f64;
                    if mean > 0.0 {
                        mean
                    } else {
                        1.0
                    }
                }
            };
            chosen
                .into_iter()
                .map(|(i, j, d)| (i, j, (-d * d / sigma2).exp()))
                .collect()
        }
        Metric::Cosine => chosen
            .into_iter()
            .map(|(i, j, d)| (i, j, (1.0 - d).clamp(0.0, 1.0)))
            .collect(),
    };
    SparseGraph::from_edges(n, weights)
}

/// kNN graph of an `h x w` pixel grid, vertices in row-major order.
pub fn grid_graph(h: usize, w: usize, k: usize) -> Result<SparseGraph> {
    if h < 2 || w < 2 {
        return invalid_param(format!("grid must be at least 2x2, got {h}x{w}"));
    }
    if h * w < k + 1 {
        return invalid_param(format!("{h}x{w} grid has too few pixels for k = {k}"));
    }
    let coords = Array2::from_shape_fn((h * w, 2), |(p, axis)| {
        if axis == 0 {
            (p / w) as f64
        } else {
            (p % w) as f64
        }
    });
    knn_graph(coords.view(), k, Metric::Euclidean, Sigma::Auto)
}

fn pairwise_distances(points: ArrayView2<f64>, metric: Metric) -> Array2<f64> {
    let n = points.nrows();
    let mut dist = Array2::zeros((n, n));
    match metric {
        Metric::Euclidean => {
            for i in 0..n {
                for j in (i + 1)..n {
                    let d = points
                        .row(i)
                        .iter()
                        .zip(points.row(j))
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt();
                    dist[[i, j]] = d;
                    dist[[j, i]] = d;
                }
            }
        }
        Metric::Cosine => {
            let norms: Vec<f64> = points
                .rows()
                .into_iter()
                .map(|r| r.dot(&r).sqrt())
                .collect();
            for i in 0..n {
                for j in (i + 1)..n {
                    let denom = norms[i] * norms[j];
                    let cos = if denom > 0.0 {
                        points.row(i).dot(&points.row(j)) / denom
                    } else {
                        0.0
                    };
                    dist[[i, j]] = 1.0 - cos;
                    dist[[j, i]] = 1.0 - cos;
                }
            }
        }
    }
    dist
}
