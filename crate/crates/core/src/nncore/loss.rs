use ndarray::{Array2, ArrayView2};

use crate::error::{invalid_data, Result};

/// Per-sample class labels; `None` marks an unlabeled sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    labels: Vec<Option<usize>>,
    num_classes: usize,
}

impl LabelSet {
    /// Requires every label to be `< num_classes` and at least one labeled sample.
    pub fn new(labels: Vec<Option<usize>>, num_classes: usize) -> Result<Self> {
        if let Some(bad) = labels.iter().flatten().find(|&&c| c >= num_classes) {
            return invalid_data(format!("label {bad} out of range for {num_classes} classes"));
        }
        if labels.iter().all(Option::is_none) {
            return invalid_data("label set has no labeled samples");
        }
        Ok(Self {
            labels,
            num_classes,
        })
    }

    pub fn fully_labeled(labels: &[usize], num_classes: usize) -> Result<Self> {
        Self::new(labels.iter().map(|&c| Some(c)).collect(), num_classes)
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_labeled(&self) -> usize {
        self.labels.iter().flatten().count()
    }

    /// Labels of the given rows, or `None` when none of them is labeled.
    pub fn select(&self, rows: &[usize]) -> Option<LabelSet> {
        let labels: Vec<Option<usize>> = rows.iter().map(|&r| self.labels[r]).collect();
        LabelSet::new(labels, self.num_classes).ok()
    }

    /// Masks every label outside `keep` as unlabeled.
    pub fn masked(&self, keep: &[usize]) -> Result<LabelSet> {
        let mut labels = vec![None; self.labels.len()];
        for &k in keep {
            labels[k] = self.labels[k];
        }
        LabelSet::new(labels, self.num_classes)
    }
}

/// Mean softmax cross-entropy over labeled rows and its gradient w.r.t. the logits.
///
/// Unlabeled rows contribute neither loss nor gradient.
pub fn softmax_xent(logits: ArrayView2<f64>, labels: &LabelSet) -> Result<(f64, Array2<f64>)> {
    let (b, c) = logits.dim();
    if c != labels.num_classes() {
        return invalid_data(format!(
            "logits have {c} columns, label set has {} classes",
            labels.num_classes()
        ));
    }
    if b != labels.len() {
        return invalid_data(format!("{b} logit rows for {} labels", labels.len()));
    }
    let count = labels.num_labeled();
    if count == 0 {
        return invalid_data("no labeled rows");
    }
    let scale = 1.0 / count as f64;
    let mut grad = Array2::zeros((b, c));
    let mut loss = 0.0;
    for (r, label) in labels.labels().iter().enumerate() {
        let Some(label) = *label else { continue };
        let row = logits.row(r);
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let sum: f64 = row.iter().map(|&v| (v - max).exp()).sum();
        let log_z = max + sum.ln();
        loss += log_z - row[label];
        for k in 0..c {
            let p = (row[k] - log_z).exp();
            grad[[r, k]] = scale * (p - if k == label { 1.0 } else { 0.0 });
        }
    }
    Ok((loss * scale, grad))
}
