use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{DenseDataset, MultiViewDataset};
use crate::error::{invalid_data, invalid_param, Result};
use crate::graph::{knn_graph, normalized_laplacian, Metric, Sigma, SparseGraph};
use crate::nncore::LabelSet;
use crate::noise::NoiseSpec;

/// Graph-signal classification task on a random geometric graph.
///
/// Class templates and within-class variation both live in the span of the
/// `spectrum_dims` lowest-frequency non-trivial Laplacian eigenvectors, so
/// clean data is low-rank and smooth on the graph.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_vertices: usize,
    pub n_samples: usize,
    pub n_train: usize,
    pub n_classes: usize,
    pub knn_k: usize,
    pub spectrum_dims: usize,
    /// Within-class perturbation norm relative to the template norm.
    pub spread: f64,
    /// Per-entry standard deviation of white noise, relative to `amplitude`.
    pub white_noise: f64,
    /// Root-mean-square entry of a class template. Everything else scales with it.
    pub amplitude: f64,
    pub graph_seed: u64,
    pub seed: u64,
    /// Regenerate until nearest-template accuracy on clean data reaches this.
    pub min_oracle_accuracy: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_vertices: 64,
            n_samples: 500,
            n_train: 400,
            n_classes: 2,
            knn_k: 8,
            spectrum_dims: 10,
            spread: 1.2,
            white_noise: 0.1,
            amplitude: 1.0,
            graph_seed: 0,
            seed: 0,
            min_oracle_accuracy: 0.9,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_classes < 2 {
            return invalid_param("need at least two classes");
        }
        if self.n_samples < 10 * self.n_classes {
            return invalid_param(format!(
                "need at least {} samples for {} classes",
                10 * self.n_classes,
                self.n_classes
            ));
        }
        if self.n_train == 0 || self.n_train >= self.n_samples {
            return invalid_param("n_train must lie in (0, n_samples)");
        }
        if self.spectrum_dims == 0 || self.spectrum_dims >= self.n_vertices {
            return invalid_param("spectrum_dims must lie in [1, n_vertices)");
        }
        if self.spread < 0.0 || self.white_noise < 0.0 {
            return invalid_param("spread and white_noise must be non-negative");
        }
        if !(self.amplitude > 0.0) {
            return invalid_param("amplitude must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticTask {
    pub dataset: DenseDataset,
    pub graph: SparseGraph,
    /// One row per class.
    pub templates: Array2<f64>,
    pub oracle_accuracy: f64,
}

/// Uniform points in the unit square joined by a kNN graph.
pub fn random_geometric_graph(n: usize, k: usize, seed: u64) -> Result<SparseGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = Array2::from_shape_simple_fn((n, 2), || rng.random::<f64>());
    knn_graph(pts.view(), k, Metric::Euclidean, Sigma::Auto)
}

/// Eigenvectors 1..=dims (ascending eigenvalue) of the normalized Laplacian, as columns.
fn low_frequency_basis(g: &SparseGraph, dims: usize) -> Array2<f64> {
    let n = g.n();
    let dense = normalized_laplacian(g).to_dense();
    let eig = SymmetricEigen::new(DMatrix::from_fn(n, n, |i, j| dense[[i, j]]));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    Array2::from_shape_fn((n, dims), |(i, d)| eig.eigenvectors[(i, order[d + 1])])
}

fn gaussian_vec<R: Rng>(rng: &mut R, len: usize) -> Array1<f64> {
    Array1::from_shape_simple_fn(len, || rng.sample(StandardNormal))
}

/// Fraction of rows whose nearest template (Euclidean) has their label.
pub fn nearest_template_accuracy(x: ArrayView2<f64>, labels: &[usize], templates: ArrayView2<f64>) -> f64 {
    let correct = x
        .rows()
        .into_iter()
        .zip(labels)
        .filter(|(row, &label)| {
            let dist = |t: ndarray::ArrayView1<f64>| row.iter().zip(t).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            let best = (0..templates.nrows())
                .min_by(|&a, &b| dist(templates.row(a)).total_cmp(&dist(templates.row(b))))
                .expect("at least one template");
            best == label
        })
        .count();
    correct as f64 / labels.len().max(1) as f64
}

fn generate(config: &SynthConfig, graph_seed: u64, seed: u64) -> Result<SyntheticTask> {
    let n = config.n_vertices;
    let dims = config.spectrum_dims;
    let graph = random_geometric_graph(n, config.knn_k, graph_seed)?;
    let basis = low_frequency_basis(&graph, dims);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut templates = Array2::zeros((config.n_classes, n));
    for mut t in templates.rows_mut() {
        let v = basis.dot(&gaussian_vec(&mut rng, dims));
        let norm = v.dot(&v).sqrt();
        t.assign(&(v * (config.amplitude * (n as f64).sqrt() / norm)));
    }
    let mut labels: Vec<usize> = (0..config.n_samples).map(|i| i % config.n_classes).collect();
    labels.shuffle(&mut rng);
    let scale = config.amplitude * config.spread * (n as f64 / dims as f64).sqrt();
    let mut x = Array2::zeros((config.n_samples, n));
    for (mut row, &c) in x.rows_mut().into_iter().zip(&labels) {
        let wiggle = basis.dot(&gaussian_vec(&mut rng, dims)) * scale;
        let white = gaussian_vec(&mut rng, n) * (config.amplitude * config.white_noise);
        row.assign(&(&templates.row(c) + &wiggle + &white));
    }
    let oracle_accuracy = nearest_template_accuracy(x.view(), &labels, templates.view());
    let train: Vec<usize> = (0..config.n_train).collect();
    let test: Vec<usize> = (config.n_train..config.n_samples).collect();
    let dataset = DenseDataset {
        x,
        labels: LabelSet::fully_labeled(&labels, config.n_classes)?,
        train,
        test,
        name: "synthetic".into(),
        provenance: format!("synth_classification graph_seed={graph_seed} seed={seed}"),
    };
    Ok(SyntheticTask {
        dataset,
        graph,
        templates,
        oracle_accuracy,
    })
}

/// Generates the task, retrying with fresh seeds up to five times when the
/// nearest-template accuracy falls below `min_oracle_accuracy`. When `noise`
/// is given it corrupts the training rows only.
pub fn synth_classification(config: &SynthConfig, noise: Option<&NoiseSpec>) -> Result<SyntheticTask> {
    config.validate()?;
    const ATTEMPTS: u64 = 5;
    for attempt in 0..ATTEMPTS {
        let mut task = generate(config, config.graph_seed + attempt, config.seed + attempt)?;
        if task.oracle_accuracy >= config.min_oracle_accuracy {
            if let Some(spec) = noise {
                task.dataset = task.dataset.with_noisy_train(spec)?;
            }
            return Ok(task);
        }
        log::info!(
            "synthetic attempt {attempt}: oracle accuracy {:.3} below {}",
            task.oracle_accuracy,
            config.min_oracle_accuracy
        );
    }
    invalid_data(format!(
        "synthetic task failed its self-check {ATTEMPTS} times"
    ))
}

/// Independent views (own graph, templates and variation) over shared labels.
pub fn synth_multiview(config: &SynthConfig, n_views: usize) -> Result<(MultiViewDataset, Vec<SparseGraph>)> {
    config.validate()?;
    if n_views == 0 {
        return invalid_param("need at least one view");
    }
    let base = generate(config, config.graph_seed, config.seed)?;
    let labels: Vec<usize> = base.dataset.labels.labels().iter().map(|l| l.expect("labeled")).collect();
    let mut views = vec![base.dataset.clone()];
    let mut graphs = vec![base.graph];
    for v in 1..n_views as u64 {
        let mut task = generate(config, config.graph_seed + 1000 * v, config.seed + 1000 * v)?;
        let order = relabel_order(&task.dataset, &labels, config.n_classes, config.seed + v);
        task.dataset.x = task.dataset.x.select(Axis(0), &order);
        task.dataset.labels = base.dataset.labels.clone();
        views.push(task.dataset);
        graphs.push(task.graph);
    }
    Ok((MultiViewDataset::new(views)?, graphs))
}

/// Row order that gives `other` the label sequence `labels`.
fn relabel_order(other: &DenseDataset, labels: &[usize], n_classes: usize, seed: u64) -> Vec<usize> {
    let mut pools: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, l) in other.labels.labels().iter().enumerate() {
        pools[l.expect("labeled")].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for p in &mut pools {
        p.shuffle(&mut rng);
    }
    labels.iter().map(|&c| pools[c].pop().expect("balanced classes")).collect()
}

/// `x = l0 + e0` with a Gaussian-factor rank-`rank` `l0` and exactly
/// `floor(spike_fraction * n * m)` spikes of `+-spike_magnitude` in `e0`.
#[derive(Debug, Clone)]
pub struct LowRankSparse {
    pub x: Array2<f64>,
    pub l0: Array2<f64>,
    pub e0: Array2<f64>,
}

pub fn synth_lowrank_sparse(
    n: usize,
    m: usize,
    rank: usize,
    spike_fraction: f64,
    spike_magnitude: f64,
    seed: u64,
) -> Result<LowRankSparse> {
    if rank > n.min(m) {
        return invalid_param(format!("rank {rank} exceeds min({n}, {m})"));
    }
    if !(0.0..=1.0).contains(&spike_fraction) {
        return invalid_param("spike_fraction must lie in [0, 1]");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = Array2::from_shape_simple_fn((n, rank), || rng.sample::<f64, _>(StandardNormal));
    let b = Array2::from_shape_simple_fn((rank, m), || rng.sample::<f64, _>(StandardNormal));
    let l0 = a.dot(&b);
    let count = (spike_fraction * (n * m) as f64).floor() as usize;
    let mut e0 = Array2::zeros((n, m));
    for idx in rand::seq::index::sample(&mut rng, n * m, count) {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        e0[[idx / m, idx % m]] = sign * spike_magnitude;
    }
    Ok(LowRankSparse {
        x: &l0 + &e0,
        l0,
        e0,
    })
}
