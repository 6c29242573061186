//! Feature and similarity graphs.
//!
//! A [`SparseGraph`] is a symmetric, non-negative weighted adjacency stored in
//! CSR layout with both directions of every edge present. Graphs are built
//! from point clouds ([`knn_graph`]) or pixel grids ([`grid_graph`]), turned
//! into normalized and rescaled Laplacians for Chebyshev filtering, and
//! coarsened by heavy-edge matching to obtain pooling neighborhoods.

mod coarsen;
mod io;
mod knn;
mod laplacian;

pub use coarsen::{coarsen, CoarseningMap};
pub use io::{read_edge_list, write_edge_list};
pub use knn::{grid_graph, knn_graph, Metric, Sigma};
pub use laplacian::{
    estimate_lambda_max, normalized_laplacian, rescale_laplacian, Laplacian, LaplacianKind,
    LAMBDA_MAX_ITERS, LAMBDA_MAX_TOL,
};

use std::collections::BTreeMap;

use ndarray::Array2;

use crate::error::{invalid_data, Result};

/// Symmetric weighted adjacency without self-loops.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGraph {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    weights: Vec<f64>,
}

impl SparseGraph {
    /// Graph on `n` vertices with no edges.
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            indptr: vec![0; n + 1],
            indices: Vec::new(),
            weights: Vec::new(),
        }
    }

    /// Builds a graph from undirected edge triples.
    ///
    /// Each `(i, j, w)` is stored in both directions. Repeated pairs (in either
    /// orientation) keep the larger weight, so a directed kNN relation becomes
    /// symmetric through `w <- max(w, w^T)`.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
        for (i, j, w) in edges {
            if i >= n || j >= n {
                return invalid_data(format!("edge ({i}, {j}) out of range for n = {n}"));
            }
            if !w.is_finite() || w < 0.0 {
                return invalid_data(format!("edge ({i}, {j}) has invalid weight {w}"));
            }
            if i == j {
                if w == 0.0 {
                    continue;
                }
                return invalid_data(format!("self-loop at vertex {i}"));
            }
            for (a, b) in [(i, j), (j, i)] {
                let slot = rows[a].entry(b).or_insert(w);
                if w > *slot {
                    *slot = w;
                }
            }
        }
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut weights = Vec::new();
        indptr.push(0);
        for row in rows {
            for (j, w) in row {
                indices.push(j);
                weights.push(w);
            }
            indptr.push(indices.len());
        }
        Ok(Self {
            n,
            indptr,
            indices,
            weights,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.indices.len() / 2
    }

    /// Neighbors of `i` with their weights, in increasing index order.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.weights[span].iter().copied())
    }

    pub fn neighbor_count(&self, i: usize) -> usize {
        self.indptr[i + 1] - self.indptr[i]
    }

    /// Weighted degree `d_i = sum_j w_ij`.
    pub fn degree(&self, i: usize) -> f64 {
        self.weights[self.indptr[i]..self.indptr[i + 1]].iter().sum()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let span = self.indptr[i]..self.indptr[i + 1];
        match self.indices[span.clone()].binary_search(&j) {
            Ok(pos) => self.weights[span.start + pos],
            Err(_) => 0.0,
        }
    }

    /// Undirected edges `(i, j, w)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            self.neighbors(i)
                .filter(move |&(j, _)| j > i)
                .map(move |(j, w)| (i, j, w))
        })
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut a = Array2::zeros((self.n, self.n));
        for i in 0..self.n {
            for (j, w) in self.neighbors(i) {
                a[[i, j]] = w;
            }
        }
        a
    }
}
