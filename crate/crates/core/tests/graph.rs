use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{array, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rgcn::graph::{
    coarsen, estimate_lambda_max, grid_graph, knn_graph, normalized_laplacian, read_edge_list,
    rescale_laplacian, write_edge_list, LaplacianKind, Metric, Sigma, SparseGraph, LAMBDA_MAX_ITERS,
    LAMBDA_MAX_TOL,
};
use rgcn::Error;

fn eigenvalues(a: &Array2<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut ev: Vec<f64> = SymmetricEigen::new(DMatrix::from_fn(n, n, |i, j| a[[i, j]]))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn random_graph(n: usize, p: f64, seed: u64) -> SparseGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                edges.push((i, j, rng.random_range(0.05..3.0)));
            }
        }
    }
    SparseGraph::from_edges(n, edges).unwrap()
}

fn path3() -> SparseGraph {
    SparseGraph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap()
}

#[test]
fn from_edges_symmetrizes_by_max() {
    let g = SparseGraph::from_edges(3, [(0, 1, 0.5), (1, 0, 0.8), (1, 2, 1.0)]).unwrap();
    assert_eq!(g.weight(0, 1), 0.8);
    assert_eq!(g.weight(1, 0), 0.8);
    assert_eq!(g.weight(0, 2), 0.0);
    assert_eq!(g.num_edges(), 2);
    assert_eq!(g.degree(1), 1.8);
    let e: Vec<_> = g.edges().collect();
    assert_eq!(e, vec![(0, 1, 0.8), (1, 2, 1.0)]);
}

#[test]
fn from_edges_rejects_bad_input() {
    assert!(SparseGraph::from_edges(2, [(0, 2, 1.0)]).is_err());
    assert!(SparseGraph::from_edges(2, [(0, 1, -1.0)]).is_err());
    assert!(SparseGraph::from_edges(2, [(0, 1, f64::NAN)]).is_err());
    assert!(SparseGraph::from_edges(2, [(1, 1, 1.0)]).is_err());
}

#[test]
fn identical_points_get_unit_weight() {
    let p = array![[1.0, 2.0], [1.0, 2.0], [5.0, 5.0]];
    for sigma in [Sigma::Fixed(0.3), Sigma::Fixed(7.0), Sigma::Auto] {
        let g = knn_graph(p.view(), 1, Metric::Euclidean, sigma).unwrap();
        assert_eq!(g.weight(0, 1), 1.0);
    }
}

#[test]
fn points_on_a_line() {
    let p = array![[0.0], [1.0], [2.0], [3.0], [4.0]];
    let g = knn_graph(p.view(), 2, Metric::Euclidean, Sigma::Fixed(1.0)).unwrap();
    assert_eq!(g.weight(0, 1), (-1.0f64).exp());
    assert_eq!(g.weight(0, 2), (-4.0f64).exp());
    assert_eq!(g.weight(1, 3), 0.0);
    let neighbors = |i: usize| -> Vec<usize> { g.neighbors(i).map(|(j, _)| j).collect() };
    assert_eq!(neighbors(0), [1, 2]);
    assert_eq!(neighbors(2), [0, 1, 3, 4]);
    assert_eq!(neighbors(4), [2, 3]);
}

#[test]
fn cosine_weights_are_clamped_similarities() {
    let p = array![[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
    let g = knn_graph(p.view(), 2, Metric::Cosine, Sigma::Auto).unwrap();
    assert!((g.weight(0, 3) - 0.5f64.sqrt()).abs() < 1e-12);
    assert!((g.weight(2, 3) - 0.5f64.sqrt()).abs() < 1e-12);
    assert_eq!(g.weight(0, 1), 0.0);
    for (_, _, w) in g.edges() {
        assert!((0.0..=1.0).contains(&w));
    }
}

#[test]
fn knn_rejects_bad_parameters() {
    let p = array![[0.0], [1.0]];
    assert!(matches!(knn_graph(p.view(), 2, Metric::Euclidean, Sigma::Auto), Err(Error::InvalidParameter(_))));
    assert!(matches!(knn_graph(p.view(), 0, Metric::Euclidean, Sigma::Auto), Err(Error::InvalidParameter(_))));
    assert!(knn_graph(p.view(), 1, Metric::Euclidean, Sigma::Fixed(0.0)).is_err());
    let q = array![[0.0], [f64::NAN], [1.0]];
    assert!(matches!(knn_graph(q.view(), 1, Metric::Euclidean, Sigma::Auto), Err(Error::InvalidData(_))));
}

#[test]
fn small_grids() {
    let g = grid_graph(2, 2, 3).unwrap();
    assert_eq!(g.num_edges(), 6);
    let g = grid_graph(3, 3, 8).unwrap();
    for i in 0..9 {
        assert_eq!(g.neighbor_count(i), 8);
    }
    let g = grid_graph(3, 3, 4).unwrap();
    assert_eq!(g.neighbor_count(4), 8, "center is a top-4 neighbor of every other pixel");
    assert_eq!(grid_graph(28, 28, 8).unwrap().n(), 784);
    assert!(grid_graph(1, 5, 2).is_err());
    assert!(grid_graph(2, 2, 4).is_err());
}

/// Neighbors by explicit all-pairs sort, weight `exp(-d^2 / sigma^2)`, max-symmetrized.
fn brute_force_knn(p: &Array2<f64>, k: usize, sigma2: Option<f64>) -> Array2<f64> {
    let n = p.nrows();
    let d2 = |i: usize, j: usize| -> f64 { (0..p.ncols()).map(|c| (p[[i, c]] - p[[j, c]]).powi(2)).sum() };
    let mut picks = Vec::new();
    for i in 0..n {
        let mut others: Vec<(f64, usize)> = (0..n).filter(|&j| j != i).map(|j| (d2(i, j).sqrt(), j)).collect();
        others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        picks.extend(others[..k].iter().map(|&(d, j)| (i, j, d)));
    }
    let sigma2 = sigma2.unwrap_or_else(|| picks.iter().map(|p| p.2 * p.2).sum::<f64>() / picks.len() as f64);
    let mut w = Array2::zeros((n, n));
    for (i, j, d) in picks {
        let v = (-d * d / sigma2).exp();
        w[[i, j]] = f64::max(w[[i, j]], v);
        w[[j, i]] = f64::max(w[[j, i]], v);
    }
    w
}

#[test]
fn three_by_three_grid_matches_brute_force() {
    let coords = Array2::from_shape_fn((9, 2), |(p, a)| if a == 0 { (p / 3) as f64 } else { (p % 3) as f64 });
    let want = brute_force_knn(&coords, 8, None);
    let got = grid_graph(3, 3, 8).unwrap().to_dense();
    for (a, b) in got.iter().zip(&want) {
        assert!((a - b).abs() < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn knn_matches_brute_force(n in 3usize..40, k_frac in 0.0f64..1.0, seed in any::<u64>(), auto in any::<bool>()) {
        let k = 1 + ((n - 2) as f64 * k_frac) as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // integer coordinates force distance ties
        let p = Array2::from_shape_simple_fn((n, 2), || rng.random_range(0..5) as f64);
        let sigma = if auto { Sigma::Auto } else { Sigma::Fixed(1.5) };
        let g = knn_graph(p.view(), k, Metric::Euclidean, sigma).unwrap();
        let want = brute_force_knn(&p, k, (!auto).then_some(2.25));
        let auto_degenerate = auto && want.iter().all(|&v| v == 0.0 || v == 1.0);
        if !auto_degenerate {
            for (a, b) in g.to_dense().iter().zip(&want) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
        for i in 0..n {
            prop_assert!(g.neighbor_count(i) >= k || want.row(i).iter().filter(|&&v| v > 0.0).count() < k);
        }
    }

    #[test]
    fn laplacians_are_symmetric_with_bounded_spectra(n in 1usize..=32, p in 0.0f64..1.0, seed in any::<u64>()) {
        let g = random_graph(n, p, seed);
        let a = g.to_dense();
        prop_assert_eq!(&a, &a.t().to_owned());
        let l = normalized_laplacian(&g);
        prop_assert_eq!(l.kind(), LaplacianKind::Normalized);
        let ld = l.to_dense();
        for (x, y) in ld.iter().zip(ld.t().iter()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
        let ev = eigenvalues(&ld);
        prop_assert!(ev[0] >= -1e-9 && ev[n - 1] <= 2.0 + 1e-9, "{:?}", ev);

        // a Rayleigh quotient never overshoots the top eigenvalue
        let lam = estimate_lambda_max(&l, LAMBDA_MAX_ITERS, LAMBDA_MAX_TOL);
        prop_assert!(lam > 0.0 && lam <= 2.0);
        prop_assert!(lam <= ev[n - 1] + 1e-9 || lam == 2.0);
        let lhat = rescale_laplacian(&l, lam).unwrap();
        prop_assert_eq!(lhat.lambda_max(), Some(lam));
        prop_assert!(eigenvalues(&lhat.to_dense())[0] >= -1.0 - 1e-9);

        let exact = rescale_laplacian(&l, ev[n - 1].max(1e-12)).unwrap();
        let ev = eigenvalues(&exact.to_dense());
        prop_assert!(ev[0] >= -1.0 - 1e-9 && ev[n - 1] <= 1.0 + 1e-9);
    }

    #[test]
    fn coarsening_is_a_consistent_binary_tree(n in 1usize..40, p in 0.0f64..0.5, levels in 0usize..4, seed in any::<u64>()) {
        let g = random_graph(n, p, seed);
        let c = coarsen(&g, levels, seed);
        prop_assert_eq!(c.num_levels(), levels);
        let total = c.padded_len(0);
        prop_assert_eq!(total, c.padded_len(levels) << levels);
        let mut seen = c.perm.clone();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..total).collect::<Vec<_>>());

        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let x: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        prop_assert_eq!(c.unpermute_signal(&c.permute_signal(&x)), x);

        for l in 0..levels {
            let fine = c.permuted_graph(l);
            let coarse = c.permuted_graph(l + 1);
            prop_assert_eq!(fine.n(), 2 * coarse.n());
            for q in 0..coarse.n() {
                prop_assert_eq!(coarse.weight(q, q), 0.0);
                for r in 0..coarse.n() {
                    if q == r {
                        continue;
                    }
                    let sum: f64 = [2 * q, 2 * q + 1]
                        .iter()
                        .flat_map(|&a| [2 * r, 2 * r + 1].map(|b| fine.weight(a, b)))
                        .sum();
                    prop_assert!((coarse.weight(q, r) - sum).abs() <= 1e-12 * sum.max(1.0));
                }
            }
            let fake = c.fake_mask(l);
            for (pos, &f) in fake.iter().enumerate() {
                if f {
                    prop_assert_eq!(fine.neighbor_count(pos), 0);
                }
            }
        }
        let again = coarsen(&g, levels, seed);
        prop_assert_eq!(again.perm, c.perm);
    }
}

#[test]
fn edgeless_laplacian_is_identity() {
    let l = normalized_laplacian(&SparseGraph::empty(3));
    assert_eq!(l.to_dense(), Array2::eye(3));
    assert!((estimate_lambda_max(&l, LAMBDA_MAX_ITERS, LAMBDA_MAX_TOL) - 1.0).abs() < 1e-6);
}

#[test]
fn isolated_vertices_get_identity_rows() {
    let g = SparseGraph::from_edges(4, [(0, 1, 2.0)]).unwrap();
    let l = normalized_laplacian(&g).to_dense();
    assert_eq!(l.row(2).to_vec(), [0.0, 0.0, 1.0, 0.0]);
    assert_eq!(l.row(3).to_vec(), [0.0, 0.0, 0.0, 1.0]);
    assert!((l[[0, 1]] + 1.0).abs() < 1e-15);
}

#[test]
fn path_graph_matches_hand_computation() {
    let l = normalized_laplacian(&path3()).to_dense();
    let r = 0.5f64.sqrt();
    for i in 0..3 {
        assert_eq!(l[[i, i]], 1.0);
    }
    assert!((l[[0, 1]] + r).abs() < 1e-15);
    assert!((l[[1, 2]] + r).abs() < 1e-15);
    assert_eq!(l[[0, 2]], 0.0);
}

#[test]
fn weighted_laplacian_matches_dense_formula() {
    let g = random_graph(12, 0.4, 3);
    let w = g.to_dense();
    let d: Vec<f64> = w.rows().into_iter().map(|r| r.sum()).collect();
    let want = Array2::from_shape_fn((12, 12), |(i, j)| {
        let id = if i == j { 1.0 } else { 0.0 };
        if d[i] == 0.0 || d[j] == 0.0 {
            id
        } else {
            id - w[[i, j]] / (d[i] * d[j]).sqrt()
        }
    });
    for (a, b) in normalized_laplacian(&g).to_dense().iter().zip(&want) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn lambda_max_matches_dense_eigensolve() {
    let l = normalized_laplacian(&path3());
    let lam = estimate_lambda_max(&l, LAMBDA_MAX_ITERS, LAMBDA_MAX_TOL);
    let exact = eigenvalues(&l.to_dense())[2];
    assert!((lam - exact).abs() <= 1e-6, "{lam} vs {exact}");

    // a star with unequal spokes has a simple, well-separated top eigenvalue
    let g = SparseGraph::from_edges(5, [(0, 1, 1.0), (0, 2, 2.0), (0, 3, 0.5), (1, 2, 0.3), (3, 4, 1.0)]).unwrap();
    let l = normalized_laplacian(&g);
    let lam = estimate_lambda_max(&l, LAMBDA_MAX_ITERS, LAMBDA_MAX_TOL);
    let exact = eigenvalues(&l.to_dense())[4];
    assert!(lam <= exact + 1e-12 && exact <= lam * (1.0 + LAMBDA_MAX_TOL), "{lam} vs {exact}");
}

#[test]
fn lambda_max_falls_back_to_bound_when_stalled() {
    // the all-ones start vector is an eigenvector of a regular graph
    let g = SparseGraph::from_edges(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)]).unwrap();
    let l = normalized_laplacian(&g);
    assert_eq!(estimate_lambda_max(&l, LAMBDA_MAX_ITERS, LAMBDA_MAX_TOL), 2.0);
}

#[test]
fn rescale_cases() {
    let l = normalized_laplacian(&SparseGraph::empty(3));
    assert_eq!(rescale_laplacian(&l, 2.0).unwrap().to_dense(), Array2::zeros((3, 3)));
    let r = rescale_laplacian(&l, 1.0).unwrap();
    assert_eq!(r.to_dense(), Array2::eye(3));
    assert_eq!(r.kind(), LaplacianKind::Rescaled);
    assert!(matches!(rescale_laplacian(&l, 0.0), Err(Error::InvalidParameter(_))));
    assert!(rescale_laplacian(&l, -1.0).is_err());
}

#[test]
fn rescaled_path_spectrum_is_in_unit_interval() {
    let l = normalized_laplacian(&path3());
    let exact = eigenvalues(&l.to_dense())[2];
    let ev = eigenvalues(&rescale_laplacian(&l, exact).unwrap().to_dense());
    assert!(ev[0] >= -1.0 - 1e-12 && ev[2] <= 1.0 + 1e-12);
}

#[test]
fn coarsen_zero_levels_is_identity() {
    let g = SparseGraph::from_edges(3, [(0, 1, 1.0)]).unwrap();
    let c = coarsen(&g, 0, 7);
    assert_eq!(c.perm, vec![0, 1, 2]);
    assert_eq!(c.levels.len(), 1);
    assert_eq!(c.fake_count, vec![0]);
}

#[test]
fn coarsen_matches_the_heavy_edge() {
    let g = SparseGraph::from_edges(4, [(0, 1, 10.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)]).unwrap();
    for seed in 0..50 {
        let c = coarsen(&g, 1, seed);
        let pos = |v: usize| c.perm.iter().position(|&p| p == v).unwrap();
        assert_eq!(pos(0) / 2, pos(1) / 2, "seed {seed}");
        assert_eq!(pos(2) / 2, pos(3) / 2, "seed {seed}");
    }
}

#[test]
fn coarsen_pads_odd_counts() {
    let g = SparseGraph::from_edges(5, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0)]).unwrap();
    let c = coarsen(&g, 1, 3);
    assert_eq!(c.levels[1].n(), 3);
    assert_eq!(c.perm.len(), 6);
    assert_eq!(c.fake_count[0], 1);
    assert_eq!(c.fake_mask(0).iter().filter(|&&f| f).count(), 1);
}

#[test]
fn edge_list_round_trip_and_errors() {
    let g = SparseGraph::from_edges(4, [(0, 1, 0.1 + 0.2), (2, 3, std::f64::consts::PI)]).unwrap();
    let mut buf = Vec::new();
    write_edge_list(&g, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("#vertices 4\n"));
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(1).unwrap().split('\t').count() == 3);
    assert_eq!(read_edge_list(buf.as_slice()).unwrap(), g);

    match read_edge_list("#vertices 3\n0\t1\t1.0\n1 2 3\n".as_bytes()) {
        Err(Error::Parse { offset, .. }) => assert_eq!(offset, 20),
        other => panic!("expected parse error, got {other:?}"),
    }
    assert!(read_edge_list("0\t1\t1\n".as_bytes()).is_err());
    assert!(read_edge_list("#vertices 2\n0\t5\t1\n".as_bytes()).is_err());
}
