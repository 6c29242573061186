use ndarray::{Array2, ArrayView2, Zip};

use super::network::{ae_forward, Autoencoder};
use super::train::{AeTrainConfig, AeTrainer};
use crate::error::{invalid_data, invalid_param, Error, Result};

/// Elementwise soft-thresholding `max(e - lam, 0) + min(e + lam, 0)`.
pub fn prox_l1(e: ArrayView2<f64>, lam: f64) -> Result<Array2<f64>> {
    if !(lam >= 0.0) {
        return invalid_param(format!("lambda must be non-negative, got {lam}"));
    }
    Ok(e.mapv(|v| soft_threshold(v, lam)))
}

fn soft_threshold(v: f64, lam: f64) -> f64 {
    (v - lam).max(0.0) + (v + lam).min(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RlaeConfig {
    pub lambda: f64,
    /// Threshold continuation: iteration `t` thresholds at
    /// `max(lambda, max|X| * lambda_decay^t)`. `1.0` keeps `lambda` fixed.
    pub lambda_decay: f64,
    pub tol: f64,
    pub max_outer: usize,
    /// Autoencoder epochs per outer iteration; `train.epochs` is ignored.
    pub inner_epochs: usize,
    pub train: AeTrainConfig,
}

impl RlaeConfig {
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            lambda_decay: 1.0,
            tol: 1e-2,
            max_outer: 20,
            inner_epochs: 50,
            train: AeTrainConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) {
            return invalid_param(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.lambda_decay > 0.0 && self.lambda_decay <= 1.0) {
            return invalid_param(format!("lambda_decay must lie in (0, 1], got {}", self.lambda_decay));
        }
        if !(self.tol > 0.0) {
            return invalid_param(format!("tol must be positive, got {}", self.tol));
        }
        if self.max_outer == 0 {
            return invalid_param("max_outer must be at least 1");
        }
        Ok(())
    }
}

/// `X ~ low_rank + err_sparse`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub low_rank: Array2<f64>,
    pub err_sparse: Array2<f64>,
    /// `||X - L - E||_F / ||X||_F`.
    pub residual: f64,
    pub outer_iters: usize,
    pub converged: bool,
    /// Residual after each outer iteration.
    pub history: Vec<f64>,
}

impl Decomposition {
    /// Fraction of exactly-zero entries of `err_sparse`.
    pub fn sparsity(&self) -> f64 {
        let zeros = self.err_sparse.iter().filter(|&&v| v == 0.0).count();
        zeros as f64 / self.err_sparse.len().max(1) as f64
    }
}

/// `||X - L - E||_F / ||X||_F`, zero when `X` is zero.
pub fn relative_residual(x: ArrayView2<f64>, l: ArrayView2<f64>, e: ArrayView2<f64>) -> f64 {
    let norm_x = frobenius(x);
    if norm_x == 0.0 {
        return 0.0;
    }
    let mut acc = 0.0;
    Zip::from(x).and(l).and(e).for_each(|&a, &b, &c| {
        let r = a - b - c;
        acc += r * r;
    });
    acc.sqrt() / norm_x
}

pub(crate) fn frobenius(a: ArrayView2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// One robust low-rank autoencoder fit, advanced an outer iteration at a time.
///
/// Each iteration trains the autoencoder on `X - E`, sets `L = D(E(X - E))`
/// and then `E = prox_l1(X - L, lambda)`.
#[derive(Debug, Clone)]
pub struct RlaeState {
    config: RlaeConfig,
    trainer: AeTrainer,
    low_rank: Array2<f64>,
    err_sparse: Array2<f64>,
    history: Vec<f64>,
    best: Option<(f64, usize, Array2<f64>, Array2<f64>)>,
    zero_input: bool,
    lambda_start: f64,
}

impl RlaeState {
    pub fn new(x: ArrayView2<f64>, config: RlaeConfig) -> Result<Self> {
        config.validate()?;
        if x.iter().any(|v| !v.is_finite()) {
            return invalid_data("input matrix has non-finite entries");
        }
        Ok(Self {
            trainer: AeTrainer::new(config.train)?,
            config,
            low_rank: x.to_owned(),
            err_sparse: Array2::zeros(x.dim()),
            history: Vec::new(),
            best: None,
            zero_input: frobenius(x) == 0.0,
            lambda_start: x.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        })
    }

    pub fn config(&self) -> &RlaeConfig {
        &self.config
    }

    pub fn low_rank(&self) -> &Array2<f64> {
        &self.low_rank
    }

    pub fn err_sparse(&self) -> &Array2<f64> {
        &self.err_sparse
    }

    pub fn history(&self) -> &[f64] {
        &self.history
    }

    /// Threshold the next refresh will use.
    pub fn current_lambda(&self) -> f64 {
        self.lambda_at(self.history.len())
    }

    pub fn iterations(&self) -> usize {
        self.history.len()
    }

    /// Residual below `tol` with the threshold at its final value.
    pub fn converged(&self) -> bool {
        let Some(t) = self.history.len().checked_sub(1) else {
            return false;
        };
        self.lambda_at(t) == self.config.lambda && self.history[t] < self.config.tol
    }

    fn lambda_at(&self, t: usize) -> f64 {
        let c = &self.config;
        if c.lambda_decay == 1.0 {
            return c.lambda;
        }
        c.lambda.max(self.lambda_start * c.lambda_decay.powi(t.min(i32::MAX as usize) as i32))
    }

    /// `X - E`, the autoencoder's training input.
    pub fn cleaned_input(&self, x: ArrayView2<f64>) -> Array2<f64> {
        &x - &self.err_sparse
    }

    /// Runs `inner_epochs` of autoencoder training on `X - E` and refreshes
    /// `L` and `E`. Returns the new residual.
    pub fn outer_step(&mut self, ae: &mut Autoencoder, x: ArrayView2<f64>) -> Result<f64> {
        if self.zero_input {
            self.low_rank.fill(0.0);
            self.err_sparse.fill(0.0);
            return Ok(self.record(0.0));
        }
        let input = self.cleaned_input(x);
        self.trainer
            .train(ae, input.view(), input.view(), None, self.config.inner_epochs)?;
        let low_rank = ae_forward(ae, input.view())?;
        self.refresh(x, low_rank)
    }

    /// Replaces `L` with `low_rank`, thresholds `E = prox(X - L)` and records
    /// the residual. Used when the autoencoder is trained elsewhere.
    pub fn refresh(&mut self, x: ArrayView2<f64>, low_rank: Array2<f64>) -> Result<f64> {
        if low_rank.dim() != x.dim() {
            return invalid_data("low-rank component shape differs from the input");
        }
        if low_rank.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged {
                epoch: self.history.len(),
                detail: "non-finite low-rank component".into(),
            });
        }
        self.low_rank = low_rank;
        self.err_sparse = prox_l1((&x - &self.low_rank).view(), self.current_lambda())?;
        let residual = relative_residual(x, self.low_rank.view(), self.err_sparse.view());
        Ok(self.record(residual))
    }

    fn record(&mut self, residual: f64) -> f64 {
        let settled = self.lambda_at(self.history.len()) == self.config.lambda;
        self.history.push(residual);
        let iter = self.history.len();
        if settled && self.best.as_ref().is_none_or(|b| residual < b.0) {
            self.best = Some((residual, iter, self.low_rank.clone(), self.err_sparse.clone()));
        }
        residual
    }

    /// The current iterate as a decomposition.
    pub fn current(&self, x: ArrayView2<f64>) -> Decomposition {
        Decomposition {
            low_rank: self.low_rank.clone(),
            err_sparse: self.err_sparse.clone(),
            residual: relative_residual(x, self.low_rank.view(), self.err_sparse.view()),
            outer_iters: self.history.len(),
            converged: self.converged(),
            history: self.history.clone(),
        }
    }

    /// The converged iterate, or the lowest-residual one seen so far.
    pub fn finish(self, x: ArrayView2<f64>) -> Decomposition {
        if self.converged() {
            return self.current(x);
        }
        match self.best {
            Some((residual, _, low_rank, err_sparse)) => Decomposition {
                low_rank,
                err_sparse,
                residual,
                outer_iters: self.history.len(),
                converged: false,
                history: self.history,
            },
            None => self.current(x),
        }
    }
}

/// Robust low-rank decomposition of `x`: iterates until the residual drops
/// below `tol` or `max_outer` iterations have run.
pub fn rlae_fit(ae: &mut Autoencoder, x: ArrayView2<f64>, config: &RlaeConfig) -> Result<Decomposition> {
    let mut state = RlaeState::new(x, *config)?;
    for _ in 0..config.max_outer {
        let r = state.outer_step(ae, x)?;
        log::debug!("outer iteration {}: residual {r:.3e}", state.iterations());
        if state.converged() {
            break;
        }
    }
    if !state.converged() {
        log::warn!(
            "robust decomposition stopped after {} iterations above tol {}",
            config.max_outer,
            config.tol
        );
    }
    Ok(state.finish(x))
}

/// Support F1 of `d.err_sparse` against `e0` and `||L - L0||_F / ||L0||_F`.
pub fn recovery_scores(d: &Decomposition, l0: ArrayView2<f64>, e0: ArrayView2<f64>) -> Result<(f64, f64)> {
    if l0.dim() != d.low_rank.dim() || e0.dim() != d.err_sparse.dim() {
        return invalid_data("ground truth shape differs from the decomposition");
    }
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    Zip::from(&d.err_sparse).and(e0).for_each(|&e, &t| match (e != 0.0, t != 0.0) {
        (true, true) => tp += 1,
        (true, false) => fp += 1,
        (false, true) => fn_ += 1,
        _ => {}
    });
    let f1 = if tp == 0 { 0.0 } else { 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64 };
    let rel = frobenius((&d.low_rank - &l0).view()) / frobenius(l0).max(f64::MIN_POSITIVE);
    Ok((f1, rel))
}

/// Geometric grid of `count` lambdas spanning a factor of 4 either side of
/// `1 / sqrt(max(n, m))`.
pub fn lambda_grid(n: usize, m: usize, count: usize) -> Vec<f64> {
    let center = 1.0 / (n.max(m).max(1) as f64).sqrt();
    match count {
        0 => Vec::new(),
        1 => vec![center],
        _ => (0..count)
            .map(|i| {
                let t = i as f64 / (count - 1) as f64;
                center * 4f64.powf(2.0 * t - 1.0)
            })
            .collect(),
    }
}
