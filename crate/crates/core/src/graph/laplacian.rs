use ndarray::{Array2, ArrayView2, ArrayViewMut2};

use super::SparseGraph;
use crate::error::{invalid_param, Result};

/// Power-iteration budget used when rescaling Laplacians.
pub const LAMBDA_MAX_ITERS: usize = 200;
/// Residual tolerance for the power iteration, relative to the estimate.
pub const LAMBDA_MAX_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaplacianKind {
    /// `I - D^{-1/2} W D^{-1/2}`, spectrum in `[0, 2]`.
    Normalized,
    /// `(2 / lambda_max) L - I`, spectrum in `[-1, 1]`.
    Rescaled,
}

/// Sparse symmetric Laplacian in CSR layout with an explicit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    kind: LaplacianKind,
    lambda_max: Option<f64>,
}

impl Laplacian {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> LaplacianKind {
        self.kind
    }

    /// The `lambda_max` a rescaled Laplacian was built with.
    pub fn lambda_max(&self) -> Option<f64> {
        self.lambda_max
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut a = Array2::zeros((self.n, self.n));
        for i in 0..self.n {
            for k in self.indptr[i]..self.indptr[i + 1] {
                a[[i, self.indices[k]]] = self.values[k];
            }
        }
        a
    }

    /// `y = L x` for a single vector.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            *yi = acc;
        }
    }

    /// `out = L x` where `x` is `n x F` (one column per feature map).
    pub fn apply(&self, x: ArrayView2<f64>, mut out: ArrayViewMut2<f64>) {
        debug_assert_eq!(x.nrows(), self.n);
        out.fill(0.0);
        for i in 0..self.n {
            let mut row = out.row_mut(i);
            for k in self.indptr[i]..self.indptr[i + 1] {
                row.scaled_add(self.values[k], &x.row(self.indices[k]));
            }
        }
    }
}

/// Symmetric normalized Laplacian `I - D^{-1/2} W D^{-1/2}`.
///
/// Isolated vertices keep an identity row.
pub fn normalized_laplacian(g: &SparseGraph) -> Laplacian {
    let n = g.n();
    let inv_sqrt_deg: Vec<f64> = (0..n)
        .map(|i| {
            let d = g.degree(i);
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let mut indptr = Vec::with_capacity(n + 1);
    let mut indices = Vec::with_capacity(g.num_edges() * 2 + n);
    let mut values = Vec::with_capacity(g.num_edges() * 2 + n);
    indptr.push(0);
    for i in 0..n {
        let mut diag_done = false;
        for (j, w) in g.neighbors(i) {
            if !diag_done && j > i {
                indices.push(i);
                values.push(1.0);
                diag_done = true;
            }
            if w > 0.0 {
                indices.push(j);
                values.push(-w * inv_sqrt_deg[i] * inv_sqrt_deg[j]);
            }
        }
        if !diag_done {
            indices.push(i);
            values.push(1.0);
        }
        indptr.push(indices.len());
    }
    Laplacian {
        n,
        indptr,
        indices,
        values,
        kind: LaplacianKind::Normalized,
        lambda_max: None,
    }
}

/// Largest eigenvalue of a normalized Laplacian by power iteration.
///
/// Starts from the all-ones vector and stops once the eigen-residual
/// `||L v - lambda v||` drops below `tol * lambda`, which brackets the
/// nearest eigenvalue within a relative `tol`. Returns the bound `2.0` when
/// the iteration collapses or fails to converge in `iters` steps.
pub fn estimate_lambda_max(l: &Laplacian, iters: usize, tol: f64) -> f64 {
    const UPPER_BOUND: f64 = 2.0;
    let n = l.n();
    if n == 0 {
        return UPPER_BOUND;
    }
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut lv = vec![0.0; n];
    for _ in 0..iters {
        l.matvec(&v, &mut lv);
        let lambda: f64 = v.iter().zip(&lv).map(|(a, b)| a * b).sum();
        let norm = lv.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 1e-12) || !lambda.is_finite() {
            return UPPER_BOUND;
        }
        let residual = v
            .iter()
            .zip(&lv)
            .map(|(a, b)| (b - lambda * a).powi(2))
            .sum::<f64>()
            .sqrt();
        if lambda > 0.0 && residual <= tol * lambda {
            return lambda;
        }
        for (vi, li) in v.iter_mut().zip(&lv) {
            *vi = li / norm;
        }
    }
    UPPER_BOUND
}

/// `(2 / lambda_max) L - I`.
pub fn rescale_laplacian(l: &Laplacian, lambda_max: f64) -> Result<Laplacian> {
    if !(lambda_max > 0.0 && lambda_max.is_finite()) {
        return invalid_param(format!("lambda_max must be positive, got {lambda_max}"));
    }
    let scale = 2.0 / lambda_max;
    let mut out = l.clone();
    for i in 0..out.n {
        for k in out.indptr[i]..out.indptr[i + 1] {
            out.values[k] *= scale;
            if out.indices[k] == i {
                out.values[k] -= 1.0;
            }
        }
    }
    out.kind = LaplacianKind::Rescaled;
    out.lambda_max = Some(lambda_max);
    Ok(out)
}
