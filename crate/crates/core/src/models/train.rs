use std::time::Instant;

use ndarray::{Array2, ArrayView2};
use rand::Rng;

use super::model::{accuracy, rng_stream, stream, BatchLoss, Model};
use super::spec::AeKind;
use crate::autoencoder::{ae_forward, AeTrainConfig, AeTrainer, RlaeConfig, RlaeState};
use crate::error::{invalid_data, Error, Result};
use crate::nncore::{shuffled_batches, Adam, AdamConfig, LabelSet};

/// Metrics of one training epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Row-weighted means over the epoch's mini-batches.
    pub ce: f64,
    pub ae: f64,
    pub total: f64,
    pub train_accuracy: f64,
    pub test_accuracy: Option<f64>,
    /// Relative residual of each view's robust decomposition after the epoch.
    pub residuals: Vec<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    /// Autoencoder-only pretraining losses per view.
    pub pretrain: Vec<Vec<f64>>,
    /// Whether each view's decomposition met its tolerance at the end.
    pub converged: Vec<bool>,
    pub seconds: f64,
}

impl TrainReport {
    pub fn final_train_accuracy(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.train_accuracy)
    }

    pub fn final_test_accuracy(&self) -> Option<f64> {
        self.epochs.last().and_then(|e| e.test_accuracy)
    }
}

/// Held-out rows scored after every epoch.
#[derive(Debug, Clone, Copy)]
pub struct EvalSplit<'a> {
    pub xs: &'a [ArrayView2<'a, f64>],
    pub labels: &'a LabelSet,
}

/// Single-view training.
pub fn train_rgcn(
    model: &mut Model,
    x: ArrayView2<f64>,
    labels: &LabelSet,
    test: Option<EvalSplit<'_>>,
) -> Result<TrainReport> {
    train_model(model, &[x], labels, test)
}

/// Multi-view training; views must share their row order.
pub fn train_mvrgcn(
    model: &mut Model,
    xs: &[ArrayView2<f64>],
    labels: &LabelSet,
    test: Option<EvalSplit<'_>>,
) -> Result<TrainReport> {
    train_model(model, xs, labels, test)
}

fn diverged(epoch: usize, detail: impl Into<String>) -> Error {
    Error::Diverged {
        epoch,
        detail: detail.into(),
    }
}

fn rlae_config(model: &Model, n: usize) -> RlaeConfig {
    let spec = &model.spec;
    RlaeConfig {
        lambda_decay: spec.lambda_decay,
        inner_epochs: 1,
        train: AeTrainConfig {
            epochs: 1,
            batch_size: spec.batch_size.min(n),
            adam: AdamConfig {
                lr: spec.ae_lr,
                lr_decay: 1.0,
                l2: 0.0,
                ..spec.adam
            },
            shuffle_seed: spec.seed ^ 0x7072_6574_7261_696e,
        },
        ..RlaeConfig::new(spec.lambda)
    }
}

/// Shared driver: the per-view towers (behind their autoencoders) feed one
/// head; ADAM updates all trainable tensors per mini-batch, and for robust
/// autoencoders one ADMM refresh of `L` and `E` follows every epoch.
pub fn train_model(
    model: &mut Model,
    xs: &[ArrayView2<f64>],
    labels: &LabelSet,
    test: Option<EvalSplit<'_>>,
) -> Result<TrainReport> {
    let started = Instant::now();
    let spec = model.spec.clone();
    if xs.len() != model.num_views() {
        return invalid_data(format!("model has {} views, got {}", model.num_views(), xs.len()));
    }
    let n = xs[0].nrows();
    if xs.iter().any(|x| x.nrows() != n) {
        return invalid_data("views have different sample counts");
    }
    if labels.len() != n {
        return invalid_data(format!("{} labels for {n} rows", labels.len()));
    }
    if labels.num_classes() != model.num_classes() {
        return invalid_data("label set and model disagree on the class count");
    }
    for (x, &m) in xs.iter().zip(&model.input_dims()) {
        if x.ncols() != m {
            return invalid_data(format!("view expects {m} features, got {}", x.ncols()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return invalid_data("training matrix has non-finite entries");
        }
    }
    if let Some(t) = &test {
        if t.labels.len() != t.xs.first().map_or(0, |x| x.nrows()) {
            return invalid_data("test labels differ from the number of test rows");
        }
    }

    let kind = spec.arch.ae_kind();
    let mut report = TrainReport::default();
    let mut states: Vec<RlaeState> = Vec::new();
    if kind == Some(AeKind::RobustLowRank) {
        let cfg = rlae_config(model, n);
        for (v, x) in xs.iter().enumerate() {
            let mut state = RlaeState::new(*x, cfg)?;
            let mut losses = Vec::with_capacity(spec.pretrain_epochs);
            for _ in 0..spec.pretrain_epochs {
                losses.push(state.outer_step(&mut model.aes[v], *x)?);
            }
            report.pretrain.push(losses);
            states.push(state);
        }
    } else if kind == Some(AeKind::Denoising) && spec.pretrain_epochs > 0 {
        let mut cfg = rlae_config(model, n).train;
        cfg.epochs = spec.pretrain_epochs;
        for (v, x) in xs.iter().enumerate() {
            let mut trainer = AeTrainer::new(cfg)?;
            let noise = spec.dae_noise.with_seed(spec.seed.wrapping_add(v as u64));
            report.pretrain.push(trainer.train(&mut model.aes[v], *x, *x, Some(&noise), spec.pretrain_epochs)?);
        }
    }

    let mask = model.trainable_mask();
    let mut adam = Adam::new(spec.adam)?;
    let mut shuffle = rng_stream(spec.seed, stream::SHUFFLE);
    let mut corruption = rng_stream(spec.seed, stream::CORRUPTION);

    for epoch in 0..spec.epochs {
        let epoch_start = Instant::now();
        let sources: Vec<Array2<f64>> = if states.is_empty() {
            Vec::new()
        } else {
            states.iter().zip(xs).map(|(s, x)| s.cleaned_input(*x)).collect()
        };
        let source_views: Vec<ArrayView2<f64>> = if sources.is_empty() {
            xs.to_vec()
        } else {
            sources.iter().map(|s| s.view()).collect()
        };
        let mut sums = BatchLoss::default();
        for rows in shuffled_batches(&mut shuffle, n, spec.batch_size) {
            let mut corrupt = |_v: usize, clean: Array2<f64>| -> Result<Array2<f64>> {
                spec.dae_noise.with_seed(corruption.random()).apply(clean.view())
            };
            let (inputs, targets) = model.batch_inputs(&source_views, xs, &rows, &mut corrupt)?;
            let batch_labels = labels.select(&rows);
            let (loss, grads) = model.batch_loss(&inputs, &targets, batch_labels.as_ref(), true)?;
            if !loss.total.is_finite() {
                return Err(diverged(epoch, "non-finite training loss"));
            }
            let grads = grads.expect("gradients requested");
            step(model, &mut adam, &mask, &grads.tensors, epoch)?;
            let w = rows.len() as f64;
            sums.ce += w * loss.ce;
            sums.ae += w * loss.ae;
            sums.penalty += w * loss.penalty;
            sums.total += w * loss.total;
        }
        let mut residuals = Vec::with_capacity(states.len());
        for (v, (state, x)) in states.iter_mut().zip(xs).enumerate() {
            let low_rank = ae_forward(&model.aes[v], sources[v].view())?;
            residuals.push(state.refresh(*x, low_rank)?);
        }
        let train_accuracy = accuracy(&model.predict(xs)?, labels);
        let test_accuracy = match &test {
            Some(t) => Some(accuracy(&model.predict(t.xs)?, t.labels)),
            None => None,
        };
        let nf = n as f64;
        let record = EpochRecord {
            epoch,
            ce: sums.ce / nf,
            ae: sums.ae / nf,
            total: sums.total / nf,
            train_accuracy,
            test_accuracy,
            residuals,
            seconds: epoch_start.elapsed().as_secs_f64(),
        };
        log::info!(
            "epoch {epoch}: ce {:.4} ae {:.4} total {:.4} train {:.3}{}",
            record.ce,
            record.ae,
            record.total,
            record.train_accuracy,
            record.test_accuracy.map(|a| format!(" test {a:.3}")).unwrap_or_default()
        );
        report.epochs.push(record);
    }
    for (state, x) in states.iter().zip(xs) {
        if !state.converged() {
            log::warn!(
                "decomposition residual {:.3e} above tol {} after training",
                state.current(*x).residual,
                state.config().tol
            );
        }
        report.converged.push(state.converged());
    }
    report.seconds = started.elapsed().as_secs_f64();
    Ok(report)
}

fn step(model: &mut Model, adam: &mut Adam, mask: &[bool], grads: &[Vec<f64>], epoch: usize) -> Result<()> {
    let mut params: Vec<&mut [f64]> = model
        .param_slices_mut()
        .into_iter()
        .zip(mask)
        .filter_map(|(p, &m)| m.then_some(p))
        .collect();
    let grads: Vec<&[f64]> = grads
        .iter()
        .zip(mask)
        .filter_map(|(g, &m)| m.then_some(g.as_slice()))
        .collect();
    adam.step(&mut params, &grads, epoch)
}

/// Held-out accuracy helper used by examples and the CLI.
pub fn split_accuracy(model: &Model, split: EvalSplit<'_>) -> Result<f64> {
    super::model::evaluate(model, split.xs, split.labels)
}
