//! Chebyshev spectral graph convolution.
//!
//! A filter `g(L) = sum_p theta_p T_p(L_hat)` is applied through the
//! three-term recurrence `T_0 x = x`, `T_1 x = L_hat x`,
//! `T_p x = 2 L_hat T_{p-1} x - T_{p-2} x`, costing one sparse product per
//! order. [`dense_spectral_oracle`] evaluates the same filter through an
//! explicit eigendecomposition and exists to check the sparse path.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{s, Array2, Array3, ArrayView2};

use crate::error::{invalid_data, invalid_param, Error, Result};
use crate::graph::{Laplacian, LaplacianKind};

/// Largest graph the dense oracle accepts.
pub const ORACLE_MAX_N: usize = 64;

/// Graph signals of shape `(batch, vertices, feature maps)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalBatch {
    pub data: Array3<f64>,
}

impl SignalBatch {
    pub fn new(data: Array3<f64>) -> Self {
        let data = if data.is_standard_layout() {
            data
        } else {
            data.as_standard_layout().into_owned()
        };
        Self { data }
    }

    pub fn zeros(batch: usize, n: usize, features: usize) -> Self {
        Self::new(Array3::zeros((batch, n, features)))
    }

    /// One single-feature signal per row of `rows`.
    pub fn from_rows(rows: ArrayView2<f64>) -> Self {
        let (b, n) = rows.dim();
        Self::new(
            rows.to_owned()
                .into_shape_with_order((b, n, 1))
                .expect("contiguous reshape"),
        )
    }

    pub fn batch(&self) -> usize {
        self.data.dim().0
    }

    pub fn n(&self) -> usize {
        self.data.dim().1
    }

    pub fn features(&self) -> usize {
        self.data.dim().2
    }

    fn stacked(&self) -> ArrayView2<'_, f64> {
        let (b, n, f) = self.data.dim();
        self.data
            .view()
            .into_shape_with_order((b * n, f))
            .expect("signal batches are kept in standard layout")
    }
}

/// Chebyshev coefficients `theta[p, i, j]` for order `p`, input map `i`, output map `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebParams {
    pub theta: Array3<f64>,
}

impl ChebParams {
    pub fn new(theta: Array3<f64>) -> Result<Self> {
        if theta.dim().0 == 0 {
            return invalid_param("Chebyshev order must be at least 1");
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return invalid_data("Chebyshev coefficients must be finite");
        }
        Ok(Self { theta })
    }

    pub fn order(&self) -> usize {
        self.theta.dim().0
    }

    pub fn f_in(&self) -> usize {
        self.theta.dim().1
    }

    pub fn f_out(&self) -> usize {
        self.theta.dim().2
    }

    /// Coefficients with input and output maps swapped, as used by the adjoint.
    fn transposed(&self) -> Array3<f64> {
        self.theta
            .view()
            .permuted_axes([0, 2, 1])
            .as_standard_layout()
            .into_owned()
    }
}

fn apply_batch(l: &Laplacian, x: &Array3<f64>) -> Array3<f64> {
    let mut out = Array3::zeros(x.dim());
    for (xb, ob) in x.outer_iter().zip(out.outer_iter_mut()) {
        l.apply(xb, ob);
    }
    out
}

/// `[T_0(L_hat) x, ..., T_{s-1}(L_hat) x]`.
pub fn cheb_basis(l_hat: &Laplacian, x: &SignalBatch, s: usize) -> Result<Vec<SignalBatch>> {
    if s == 0 {
        return invalid_param("Chebyshev order must be at least 1");
    }
    if l_hat.kind() != LaplacianKind::Rescaled {
        return invalid_param("Chebyshev basis needs a rescaled Laplacian");
    }
    if x.n() != l_hat.n() {
        return invalid_data(format!(
            "signal has {} vertices, Laplacian has {}",
            x.n(),
            l_hat.n()
        ));
    }
    let mut basis: Vec<Array3<f64>> = Vec::with_capacity(s);
    basis.push(x.data.as_standard_layout().into_owned());
    if s > 1 {
        basis.push(apply_batch(l_hat, &basis[0]));
    }
    for p in 2..s {
        let mut next = apply_batch(l_hat, &basis[p - 1]);
        next.zip_mut_with(&basis[p - 2], |a, &b| *a = 2.0 * *a - b);
        basis.push(next);
    }
    Ok(basis.into_iter().map(SignalBatch::new).collect())
}

fn check_basis(basis: &[SignalBatch], order: usize, f_in: usize) -> Result<(usize, usize)> {
    if basis.len() != order {
        return invalid_data(format!(
            "basis has {} orders, parameters have {order}",
            basis.len()
        ));
    }
    let (b, n, f) = basis[0].data.dim();
    if f != f_in {
        return invalid_data(format!("basis has {f} feature maps, parameters expect {f_in}"));
    }
    if basis.iter().any(|x| x.data.dim() != (b, n, f)) {
        return invalid_data("basis elements differ in shape");
    }
    Ok((b, n))
}

fn combine(basis: &[SignalBatch], theta: &Array3<f64>) -> SignalBatch {
    let (b, n, _) = basis[0].data.dim();
    let f_out = theta.dim().2;
    let mut y = Array2::<f64>::zeros((b * n, f_out));
    for (xp, tp) in basis.iter().zip(theta.outer_iter()) {
        ndarray::linalg::general_mat_mul(1.0, &xp.stacked(), &tp, 1.0, &mut y);
    }
    SignalBatch::new(y.into_shape_with_order((b, n, f_out)).expect("contiguous"))
}

/// `y[b, :, j] = sum_i sum_p theta[p, i, j] * basis[p][b, :, i]`.
pub fn cheb_conv_forward(basis: &[SignalBatch], params: &ChebParams) -> Result<SignalBatch> {
    check_basis(basis, params.order(), params.f_in())?;
    Ok(combine(basis, &params.theta))
}

/// Gradients of a Chebyshev convolution given the upstream gradient `grad_out`.
///
/// The input gradient runs the forward recurrence on `grad_out` and combines
/// it with the coefficients transposed over `(i, j)`, which is the adjoint
/// because every `T_p(L_hat)` is symmetric.
pub fn cheb_conv_backward(
    l_hat: &Laplacian,
    basis: &[SignalBatch],
    params: &ChebParams,
    grad_out: &SignalBatch,
) -> Result<(Array3<f64>, SignalBatch)> {
    let (b, n) = check_basis(basis, params.order(), params.f_in())?;
    if grad_out.data.dim() != (b, n, params.f_out()) {
        return invalid_data(format!(
            "grad_out has shape {:?}, expected {:?}",
            grad_out.data.dim(),
            (b, n, params.f_out())
        ));
    }
    let g = grad_out.data.as_standard_layout();
    let g2 = g
        .view()
        .into_shape_with_order((b * n, params.f_out()))
        .expect("contiguous");
    let mut grad_theta = Array3::zeros(params.theta.dim());
    for (xp, mut gp) in basis.iter().zip(grad_theta.outer_iter_mut()) {
        ndarray::linalg::general_mat_mul(1.0, &xp.stacked().t(), &g2, 0.0, &mut gp);
    }
    let g_basis = cheb_basis(l_hat, grad_out, params.order())?;
    let grad_x = combine(&g_basis, &params.transposed());
    Ok((grad_theta, grad_x))
}

/// Filters `x` through `U g(Lambda) U^T` using a dense eigendecomposition of
/// the normalized Laplacian `l`, with eigenvalues rescaled by `lambda_max`.
pub fn dense_spectral_oracle(
    l: &Laplacian,
    lambda_max: f64,
    params: &ChebParams,
    x: &SignalBatch,
) -> Result<SignalBatch> {
    let n = l.n();
    if n > ORACLE_MAX_N {
        return Err(Error::OracleScaleExceeded {
            n,
            max: ORACLE_MAX_N,
        });
    }
    if l.kind() != LaplacianKind::Normalized {
        return invalid_param("dense oracle takes the normalized Laplacian");
    }
    if !(lambda_max > 0.0) {
        return invalid_param(format!("lambda_max must be positive, got {lambda_max}"));
    }
    if x.n() != n || x.features() != params.f_in() {
        return invalid_data("signal shape does not match Laplacian and parameters");
    }

    let dense = l.to_dense();
    let eig = SymmetricEigen::new(DMatrix::from_fn(n, n, |i, j| dense[[i, j]]));
    let u = &eig.eigenvectors;
    let s = params.order();
    let (f_in, f_out) = (params.f_in(), params.f_out());

    // T_p at each rescaled eigenvalue, by the scalar recurrence
    let mut cheb = Array2::<f64>::zeros((s, n));
    for k in 0..n {
        let t = 2.0 * eig.eigenvalues[k] / lambda_max - 1.0;
        cheb[[0, k]] = 1.0;
        if s > 1 {
            cheb[[1, k]] = t;
        }
        for p in 2..s {
            cheb[[p, k]] = 2.0 * t * cheb[[p - 1, k]] - cheb[[p - 2, k]];
        }
    }
    // response[k, i, j] = g_ij(lambda_k)
    let mut response = Array3::<f64>::zeros((n, f_in, f_out));
    for k in 0..n {
        for i in 0..f_in {
            for j in 0..f_out {
                response[[k, i, j]] = (0..s).map(|p| params.theta[[p, i, j]] * cheb[[p, k]]).sum();
            }
        }
    }

    let mut out = Array3::zeros((x.batch(), n, f_out));
    for (xb, mut ob) in x.data.outer_iter().zip(out.outer_iter_mut()) {
        let xm = DMatrix::from_fn(n, f_in, |v, i| xb[[v, i]]);
        let spectral = u.transpose() * xm;
        let mut filtered = DMatrix::<f64>::zeros(n, f_out);
        for k in 0..n {
            for j in 0..f_out {
                filtered[(k, j)] = (0..f_in).map(|i| response[[k, i, j]] * spectral[(k, i)]).sum();
            }
        }
        let y = u * filtered;
        for v in 0..n {
            for j in 0..f_out {
                ob[[v, j]] = y[(v, j)];
            }
        }
    }
    Ok(SignalBatch::new(out))
}

/// Max over consecutive groups of `pool_size` vertices, with the winning
/// vertex index of every output slot (for routing gradients back).
pub fn graph_max_pool_with_argmax(
    x: &SignalBatch,
    pool_size: usize,
) -> Result<(SignalBatch, Array3<usize>)> {
    if pool_size == 0 || x.n() % pool_size != 0 {
        return invalid_param(format!(
            "{} vertices cannot be pooled in groups of {pool_size}",
            x.n()
        ));
    }
    let (b, n, f) = x.data.dim();
    let m = n / pool_size;
    let mut out = Array3::zeros((b, m, f));
    let mut arg = Array3::zeros((b, m, f));
    for bi in 0..b {
        for g in 0..m {
            let block = x.data.slice(s![bi, g * pool_size..(g + 1) * pool_size, ..]);
            for j in 0..f {
                let mut best = g * pool_size;
                let mut val = block[[0, j]];
                for (off, &v) in block.column(j).iter().enumerate().skip(1) {
                    if v > val {
                        val = v;
                        best = g * pool_size + off;
                    }
                }
                out[[bi, g, j]] = val;
                arg[[bi, g, j]] = best;
            }
        }
    }
    Ok((SignalBatch::new(out), arg))
}

/// Graph max-pooling over a signal already laid out by a coarsening map.
///
/// Fake slots are expected to hold `-inf` so that they never win.
pub fn graph_max_pool(x: &SignalBatch, pool_size: usize) -> Result<SignalBatch> {
    if pool_size == 1 {
        if x.n() == 0 {
            return invalid_param("cannot pool an empty signal");
        }
        return Ok(x.clone());
    }
    graph_max_pool_with_argmax(x, pool_size).map(|(y, _)| y)
}

/// Scatters pooled gradients back to the winning vertices.
pub fn graph_max_unpool(grad: &SignalBatch, argmax: &Array3<usize>, n: usize) -> SignalBatch {
    let (b, m, f) = grad.data.dim();
    let mut out = Array3::zeros((b, n, f));
    for bi in 0..b {
        for g in 0..m {
            for j in 0..f {
                out[[bi, argmax[[bi, g, j]], j]] += grad.data[[bi, g, j]];
            }
        }
    }
    SignalBatch::new(out)
}
