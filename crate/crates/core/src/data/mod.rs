//! Datasets, file formats and synthetic generators.
//!
//! Matrices travel as DMAT files (`DMAT1` magic, u64 rows, u64 cols, then
//! row-major little-endian f64) or headerless CSV. Label files hold one
//! integer per line with `-1` for unlabeled samples.

mod io;
mod synth;
mod text;

pub use io::{
    decode_dmat, load_labels, load_matrix, load_matrix_auto, save_matrix_auto, read_csv_matrix, read_dmat, read_labels,
    save_labels, save_matrix, write_csv_matrix, write_dmat, write_labels,
};
pub use synth::{
    nearest_template_accuracy, random_geometric_graph, synth_classification, synth_lowrank_sparse,
    synth_multiview, LowRankSparse, SynthConfig, SyntheticTask,
};
pub use text::{build_text_dataset, build_tfidf_view, read_embeddings, tokenize, BagOfWords, TextConfig};

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid_data, invalid_param, Result};
use crate::nncore::LabelSet;
use crate::noise::NoiseSpec;

#[derive(Debug, Clone)]
pub struct DenseDataset {
    pub x: Array2<f64>,
    pub labels: LabelSet,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub name: String,
    pub provenance: String,
}

impl DenseDataset {
    pub fn new(x: Array2<f64>, labels: LabelSet, train: Vec<usize>, test: Vec<usize>) -> Result<Self> {
        let ds = Self {
            x,
            labels,
            train,
            test,
            name: String::new(),
            provenance: String::new(),
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.x.nrows();
        if self.labels.len() != n {
            return invalid_data(format!("{} labels for {n} rows", self.labels.len()));
        }
        let mut seen = vec![false; n];
        for &i in self.train.iter().chain(&self.test) {
            if i >= n {
                return invalid_data(format!("split index {i} out of range for {n} rows"));
            }
            if std::mem::replace(&mut seen[i], true) {
                return invalid_data(format!("row {i} appears twice in the splits"));
            }
        }
        Ok(())
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn train_x(&self) -> Array2<f64> {
        self.x.select(Axis(0), &self.train)
    }

    pub fn test_x(&self) -> Array2<f64> {
        self.x.select(Axis(0), &self.test)
    }

    pub fn train_labels(&self) -> Result<LabelSet> {
        self.labels
            .select(&self.train)
            .ok_or_else(|| crate::Error::InvalidData("training split has no labels".into()))
    }

    pub fn test_labels(&self) -> Result<LabelSet> {
        self.labels
            .select(&self.test)
            .ok_or_else(|| crate::Error::InvalidData("test split has no labels".into()))
    }

    /// Copy whose training rows are corrupted by `noise`; test rows untouched.
    pub fn with_noisy_train(&self, noise: &NoiseSpec) -> Result<Self> {
        let noisy = noise.apply(self.train_x().view())?;
        let mut out = self.clone();
        for (row, &i) in noisy.rows().into_iter().zip(&self.train) {
            out.x.row_mut(i).assign(&row);
        }
        out.provenance = format!("{} + {} noise level {}", self.provenance, noise.kind.name(), noise.level);
        Ok(out)
    }

    /// Copy with every row corrupted by `noise`.
    pub fn with_noisy_rows(&self, noise: &NoiseSpec) -> Result<Self> {
        let mut out = self.clone();
        out.x = noise.apply(self.x.view())?;
        Ok(out)
    }

    /// Keeps the labels of the first `ceil(fraction * |train|)` training rows
    /// of a seeded shuffle and marks the remaining training rows unlabeled.
    pub fn semi_supervised(&self, fraction: f64, seed: u64) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return invalid_param(format!("labeled fraction must lie in (0, 1], got {fraction}"));
        }
        let mut order = self.train.clone();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let keep = ((fraction * order.len() as f64).ceil() as usize).max(1);
        let mut keep_rows: Vec<usize> = order[..keep].to_vec();
        keep_rows.extend_from_slice(&self.test);
        let mut out = self.clone();
        out.labels = self.labels.masked(&keep_rows)?;
        Ok(out)
    }
}

/// Views over the same samples sharing labels and splits.
#[derive(Debug, Clone)]
pub struct MultiViewDataset {
    pub views: Vec<DenseDataset>,
}

impl MultiViewDataset {
    pub fn new(views: Vec<DenseDataset>) -> Result<Self> {
        let Some(first) = views.first() else {
            return invalid_data("multi-view dataset needs at least one view");
        };
        for v in &views {
            v.validate()?;
            if v.x.nrows() != first.x.nrows()
                || v.labels != first.labels
                || v.train != first.train
                || v.test != first.test
            {
                return invalid_data("views disagree on samples, labels or splits");
            }
        }
        Ok(Self { views })
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn with_noisy_train(&self, noise: &NoiseSpec) -> Result<Self> {
        let views = self
            .views
            .iter()
            .enumerate()
            .map(|(v, d)| d.with_noisy_train(&noise.with_seed(noise.seed.wrapping_add(v as u64))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(views)
    }
}

/// Seeded random split of `0..n` into `n_train` training and the remaining test rows.
pub fn train_test_split(n: usize, n_train: usize, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if n_train > n {
        return invalid_param(format!("cannot take {n_train} training rows out of {n}"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = order.split_off(n_train);
    Ok((order, test))
}

/// Rescales every column to `[0, 1]`; constant columns become zero.
pub fn minmax_normalize(x: &Array2<f64>) -> Array2<f64> {
    let mut out = x.clone();
    for mut col in out.columns_mut() {
        let lo = col.fold(f64::INFINITY, |m, &v| m.min(v));
        let hi = col.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let span = hi - lo;
        col.mapv_inplace(|v| if span > 0.0 { (v - lo) / span } else { 0.0 });
    }
    out
}
