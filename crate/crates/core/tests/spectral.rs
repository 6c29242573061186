use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{array, Array2, Array3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rgcn::graph::{
    estimate_lambda_max, normalized_laplacian, rescale_laplacian, Laplacian, SparseGraph, LAMBDA_MAX_ITERS,
    LAMBDA_MAX_TOL,
};
use rgcn::spectral::{
    cheb_basis, cheb_conv_backward, cheb_conv_forward, dense_spectral_oracle, graph_max_pool,
    graph_max_pool_with_argmax, graph_max_unpool, ChebParams, SignalBatch,
};
use rgcn::Error;

fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> SparseGraph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                edges.push((i, j, rng.random_range(0.1..2.0)));
            }
        }
    }
    SparseGraph::from_edges(n, edges).unwrap()
}

fn random_tensor(rng: &mut ChaCha8Rng, shape: (usize, usize, usize)) -> Array3<f64> {
    Array3::from_shape_simple_fn(shape, || rng.random_range(-1.0..1.0))
}

struct Instance {
    l: Laplacian,
    lambda: f64,
    l_hat: Laplacian,
}

fn instance(g: &SparseGraph) -> Instance {
    let l = normalized_laplacian(g);
    let lambda = estimate_lambda_max(&l, LAMBDA_MAX_ITERS, LAMBDA_MAX_TOL);
    let l_hat = rescale_laplacian(&l, lambda).unwrap();
    Instance { l, lambda, l_hat }
}

fn filter(inst: &Instance, params: &ChebParams, x: &SignalBatch) -> SignalBatch {
    let basis = cheb_basis(&inst.l_hat, x, params.order()).unwrap();
    cheb_conv_forward(&basis, params).unwrap()
}

fn max_rel_err(a: &Array3<f64>, b: &Array3<f64>) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

fn zero_lhat(n: usize) -> Laplacian {
    rescale_laplacian(&normalized_laplacian(&SparseGraph::empty(n)), 2.0).unwrap()
}

/// `T_0 .. T_{s-1}` of a rescaled Laplacian as explicit dense matrices.
fn dense_cheb_matrices(l_hat: &Laplacian, s: usize) -> Vec<Array2<f64>> {
    let m = l_hat.to_dense();
    let n = m.nrows();
    let mut t = vec![Array2::eye(n)];
    if s > 1 {
        t.push(m.clone());
    }
    for p in 2..s {
        let next = 2.0 * m.dot(&t[p - 1]) - &t[p - 2];
        t.push(next);
    }
    t
}

fn cheb_scalar(p: usize, t: f64) -> f64 {
    let (mut a, mut b) = (1.0, t);
    for _ in 0..p {
        (a, b) = (b, 2.0 * t * b - a);
    }
    a
}

fn hop_distances(g: &SparseGraph, from: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; g.n()];
    dist[from] = 0;
    let mut queue = std::collections::VecDeque::from([from]);
    while let Some(v) = queue.pop_front() {
        for (u, _) in g.neighbors(v) {
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
    dist
}

#[test]
fn order_one_basis_is_input() {
    let x = SignalBatch::new(Array3::from_shape_fn((2, 3, 2), |(a, b, c)| (a + 2 * b + 3 * c) as f64));
    let basis = cheb_basis(&zero_lhat(3), &x, 1).unwrap();
    assert_eq!(basis, vec![x]);
}

#[test]
fn zero_laplacian_kills_first_order() {
    let x = SignalBatch::new(Array3::ones((1, 4, 1)));
    let basis = cheb_basis(&zero_lhat(4), &x, 2).unwrap();
    assert_eq!(basis[0], x);
    assert!(basis[1].data.iter().all(|&v| v == 0.0));
}

#[test]
fn basis_matches_eigendecomposition() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let g = random_graph(&mut rng, 6, 0.6);
    let inst = instance(&g);
    let x = SignalBatch::new(random_tensor(&mut rng, (2, 6, 2)));
    let basis = cheb_basis(&inst.l_hat, &x, 5).unwrap();

    let d = inst.l_hat.to_dense();
    let eig = SymmetricEigen::new(DMatrix::from_fn(6, 6, |i, j| d[[i, j]]));
    for (p, bp) in basis.iter().enumerate() {
        let tp = DMatrix::from_diagonal(&eig.eigenvalues.map(|lam| cheb_scalar(p, lam)));
        let op = &eig.eigenvectors * tp * eig.eigenvectors.transpose();
        for b in 0..2 {
            for i in 0..2 {
                let xv = DMatrix::from_fn(6, 1, |v, _| x.data[[b, v, i]]);
                let want = &op * xv;
                let scale = want.amax().max(1e-12);
                for v in 0..6 {
                    assert!((bp.data[[b, v, i]] - want[(v, 0)]).abs() / scale <= 1e-10, "order {p}");
                }
            }
        }
    }
}

#[test]
fn identity_and_zero_filters() {
    let g = SparseGraph::from_edges(3, [(0, 1, 1.0), (1, 2, 0.5)]).unwrap();
    let inst = instance(&g);
    let x = SignalBatch::new(array![[[1.0], [-2.0], [0.5]]]);
    let mut theta = Array3::zeros((3, 1, 1));
    theta[[0, 0, 0]] = 1.0;
    assert_eq!(filter(&inst, &ChebParams::new(theta).unwrap(), &x), x);
    let y0 = filter(&inst, &ChebParams::new(Array3::zeros((3, 1, 1))).unwrap(), &x);
    assert!(y0.data.iter().all(|&v| v == 0.0));
}

#[test]
fn forward_matches_explicit_matrix_powers() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10 {
        let g = random_graph(&mut rng, 6, 0.5);
        let inst = instance(&g);
        let params = ChebParams::new(random_tensor(&mut rng, (4, 2, 3))).unwrap();
        let x = SignalBatch::new(random_tensor(&mut rng, (3, 6, 2)));
        let y = filter(&inst, &params, &x);
        let t = dense_cheb_matrices(&inst.l_hat, 4);
        let mut want = Array3::zeros((3, 6, 3));
        for b in 0..3 {
            let xb = x.data.index_axis(ndarray::Axis(0), b);
            let mut acc = Array2::<f64>::zeros((6, 3));
            for (p, tp) in t.iter().enumerate() {
                acc = acc + tp.dot(&xb).dot(&params.theta.index_axis(ndarray::Axis(0), p));
            }
            want.index_axis_mut(ndarray::Axis(0), b).assign(&acc);
        }
        assert!(max_rel_err(&y.data, &want) <= 1e-12);
    }
}

#[test]
fn shape_errors() {
    let x = SignalBatch::zeros(1, 3, 2);
    assert!(matches!(cheb_basis(&zero_lhat(4), &x, 2), Err(Error::InvalidData(_))));
    assert!(cheb_basis(&zero_lhat(3), &x, 0).is_err());
    let basis = cheb_basis(&zero_lhat(3), &x, 2).unwrap();
    let p = ChebParams::new(Array3::zeros((2, 3, 1))).unwrap();
    assert!(matches!(cheb_conv_forward(&basis, &p), Err(Error::InvalidData(_))));
    let p = ChebParams::new(Array3::zeros((3, 2, 1))).unwrap();
    assert!(cheb_conv_forward(&basis, &p).is_err());
    let p = ChebParams::new(Array3::zeros((2, 2, 1))).unwrap();
    assert!(cheb_conv_backward(&zero_lhat(3), &basis, &p, &SignalBatch::zeros(1, 3, 2)).is_err());
    assert!(ChebParams::new(Array3::zeros((0, 1, 1))).is_err());
    assert!(ChebParams::new(Array3::from_elem((1, 1, 1), f64::NAN)).is_err());
}

#[test]
fn backward_of_zero_grad_is_zero() {
    let lhat = zero_lhat(3);
    let x = SignalBatch::new(Array3::from_elem((2, 3, 2), 0.7));
    let basis = cheb_basis(&lhat, &x, 2).unwrap();
    let p = ChebParams::new(Array3::from_elem((2, 2, 3), 0.3)).unwrap();
    let (gt, gx) = cheb_conv_backward(&lhat, &basis, &p, &SignalBatch::zeros(2, 3, 3)).unwrap();
    assert!(gt.iter().all(|&v| v == 0.0));
    assert!(gx.data.iter().all(|&v| v == 0.0));
}

#[test]
fn scalar_backward() {
    let lhat = zero_lhat(1);
    let x = SignalBatch::new(array![[[3.0]]]);
    let basis = cheb_basis(&lhat, &x, 1).unwrap();
    let p = ChebParams::new(array![[[2.0]]]).unwrap();
    let (gt, gx) = cheb_conv_backward(&lhat, &basis, &p, &SignalBatch::new(array![[[5.0]]])).unwrap();
    assert_eq!(gt[[0, 0, 0]], 15.0);
    assert_eq!(gx.data[[0, 0, 0]], 10.0);
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-6)
}

#[test]
fn backward_matches_central_differences() {
    let h = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for case in 0..20 {
        let n = 6;
        let g = random_graph(&mut rng, n, 0.5);
        let inst = instance(&g);
        let s = rng.random_range(1..=4);
        let params = ChebParams::new(random_tensor(&mut rng, (s, 2, 3))).unwrap();
        let x = SignalBatch::new(random_tensor(&mut rng, (2, n, 2)));
        let w = random_tensor(&mut rng, (2, n, 3));
        let loss = |p: &ChebParams, x: &SignalBatch| -> f64 { (&filter(&inst, p, x).data * &w).sum() };

        let basis = cheb_basis(&inst.l_hat, &x, s).unwrap();
        let (gt, gx) = cheb_conv_backward(&inst.l_hat, &basis, &params, &SignalBatch::new(w.clone())).unwrap();

        for idx in ndarray::indices(params.theta.dim()) {
            let mut plus = params.clone();
            plus.theta[idx] += h;
            let mut minus = params.clone();
            minus.theta[idx] -= h;
            let fd = (loss(&plus, &x) - loss(&minus, &x)) / (2.0 * h);
            assert!(rel_close(gt[idx], fd, 1e-4), "case {case} theta {idx:?}: {} vs {fd}", gt[idx]);
        }
        for idx in ndarray::indices(x.data.dim()) {
            let mut plus = x.clone();
            plus.data[idx] += h;
            let mut minus = x.clone();
            minus.data[idx] -= h;
            let fd = (loss(&params, &plus) - loss(&params, &minus)) / (2.0 * h);
            assert!(rel_close(gx.data[idx], fd, 1e-4), "case {case} x {idx:?}: {} vs {fd}", gx.data[idx]);
        }
    }
}

#[test]
fn oracle_identity_on_edgeless_graph() {
    let l = normalized_laplacian(&SparseGraph::empty(4));
    let x = SignalBatch::new(Array3::from_shape_fn((2, 4, 1), |(a, b, _)| (a * 4 + b) as f64));
    let mut theta = Array3::zeros((3, 1, 1));
    theta[[0, 0, 0]] = 1.0;
    let y = dense_spectral_oracle(&l, 1.0, &ChebParams::new(theta).unwrap(), &x).unwrap();
    assert!(max_rel_err(&y.data, &x.data) < 1e-12);
}

#[test]
fn oracle_refuses_large_graphs() {
    let l = normalized_laplacian(&SparseGraph::empty(65));
    let p = ChebParams::new(Array3::zeros((1, 1, 1))).unwrap();
    let r = dense_spectral_oracle(&l, 2.0, &p, &SignalBatch::zeros(1, 65, 1));
    assert!(matches!(r, Err(Error::OracleScaleExceeded { n: 65, .. })));
}

#[test]
fn oracle_agrees_on_fifty_random_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    for _ in 0..50 {
        let n = rng.random_range(1..=16);
        let density = rng.random_range(0.1..0.9);
        let g = random_graph(&mut rng, n, density);
        let inst = instance(&g);
        let s = rng.random_range(1..=8);
        let (fi, fo) = (rng.random_range(1..=3), rng.random_range(1..=3));
        let params = ChebParams::new(random_tensor(&mut rng, (s, fi, fo))).unwrap();
        let x = SignalBatch::new(random_tensor(&mut rng, (2, n, fi)));
        let want = dense_spectral_oracle(&inst.l, inst.lambda, &params, &x).unwrap();
        assert!(max_rel_err(&filter(&inst, &params, &x).data, &want.data) <= 1e-8);
    }
}

#[test]
fn filter_size_sweep_on_sixty_four_vertices() {
    let mut rng = ChaCha8Rng::seed_from_u64(64);
    let g = random_graph(&mut rng, 64, 0.1);
    let inst = instance(&g);
    let x = SignalBatch::new(random_tensor(&mut rng, (1, 64, 1)));
    for s in (10..=32).step_by(2) {
        let params = ChebParams::new(random_tensor(&mut rng, (s, 1, 2))).unwrap();
        let y = filter(&inst, &params, &x);
        let want = dense_spectral_oracle(&inst.l, inst.lambda, &params, &x).unwrap();
        assert!(y.data.iter().all(|v| v.is_finite()));
        assert!(max_rel_err(&y.data, &want.data) <= 1e-8, "s = {s}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forward_equals_oracle(n in 1usize..=16, s in 1usize..=8, p in 0.0f64..1.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, n, p);
        let inst = instance(&g);
        let params = ChebParams::new(random_tensor(&mut rng, (s, 2, 2))).unwrap();
        let x = SignalBatch::new(random_tensor(&mut rng, (2, n, 2)));
        let want = dense_spectral_oracle(&inst.l, inst.lambda, &params, &x).unwrap();
        prop_assert!(max_rel_err(&filter(&inst, &params, &x).data, &want.data) <= 1e-8);
    }

    #[test]
    fn filtering_is_linear(n in 1usize..=16, s in 1usize..=8, a in -3.0f64..3.0, b in -3.0f64..3.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, n, 0.4);
        let inst = instance(&g);
        let p1 = ChebParams::new(random_tensor(&mut rng, (s, 2, 2))).unwrap();
        let p2 = ChebParams::new(random_tensor(&mut rng, (s, 2, 2))).unwrap();
        let x1 = SignalBatch::new(random_tensor(&mut rng, (1, n, 2)));
        let x2 = SignalBatch::new(random_tensor(&mut rng, (1, n, 2)));

        let mixed = SignalBatch::new(a * &x1.data + b * &x2.data);
        let lhs = filter(&inst, &p1, &mixed).data;
        let rhs = a * &filter(&inst, &p1, &x1).data + b * &filter(&inst, &p1, &x2).data;
        prop_assert!(max_rel_err(&lhs, &rhs) <= 1e-12 || lhs.iter().zip(&rhs).all(|(u, v)| (u - v).abs() <= 1e-12));

        let pm = ChebParams::new(a * &p1.theta + b * &p2.theta).unwrap();
        let lhs = filter(&inst, &pm, &x1).data;
        let rhs = a * &filter(&inst, &p1, &x1).data + b * &filter(&inst, &p2, &x1).data;
        prop_assert!(max_rel_err(&lhs, &rhs) <= 1e-12 || lhs.iter().zip(&rhs).all(|(u, v)| (u - v).abs() <= 1e-12));
    }

    #[test]
    fn filters_are_local(n in 2usize..=24, s in 1usize..=5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, n, 2.0 / n as f64);
        let inst = instance(&g);
        let params = ChebParams::new(random_tensor(&mut rng, (s, 1, 1))).unwrap();
        let x = SignalBatch::new(random_tensor(&mut rng, (1, n, 1)));
        let far = rng.random_range(0..n);
        let mut bumped = x.clone();
        bumped.data[[0, far, 0]] += 10.0;
        let y0 = filter(&inst, &params, &x);
        let y1 = filter(&inst, &params, &bumped);
        for (v, d) in hop_distances(&g, far).into_iter().enumerate() {
            if d > s - 1 {
                prop_assert!((y0.data[[0, v, 0]] - y1.data[[0, v, 0]]).abs() <= 1e-12, "vertex {} at distance {}", v, d);
            }
        }
    }
}

#[test]
fn max_pool_cases() {
    let x = SignalBatch::new(array![[[3.0], [1.0], [4.0], [2.0]]]);
    assert_eq!(graph_max_pool(&x, 1).unwrap(), x);
    assert_eq!(graph_max_pool(&x, 2).unwrap().data, array![[[3.0], [4.0]]]);
    assert!(matches!(graph_max_pool(&x, 3), Err(Error::InvalidParameter(_))));
    assert!(graph_max_pool(&x, 0).is_err());
}

#[test]
fn fake_sentinel_never_wins() {
    for v in [-1e300, -5.0, 0.0, 7.0] {
        for order in [[v, f64::NEG_INFINITY], [f64::NEG_INFINITY, v]] {
            let x = SignalBatch::new(Array3::from_shape_vec((1, 2, 1), order.to_vec()).unwrap());
            assert_eq!(graph_max_pool(&x, 2).unwrap().data[[0, 0, 0]], v);
        }
    }
}

#[test]
fn unpool_routes_to_argmax() {
    let x = SignalBatch::new(array![[[3.0], [1.0], [4.0], [9.0]]]);
    let (_, arg) = graph_max_pool_with_argmax(&x, 2).unwrap();
    let g = graph_max_unpool(&SignalBatch::new(array![[[1.0], [2.0]]]), &arg, 4);
    assert_eq!(g.data, array![[[1.0], [0.0], [0.0], [2.0]]]);
}
