use crate::error::{invalid_param, Error, Result};

/// ADAM hyperparameters. `beta1` plays the role of momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Multiplicative learning-rate decay applied once per epoch.
    pub lr_decay: f64,
    /// Coefficient of the `l2/2 ||W||^2` penalty on fully connected weights.
    pub l2: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            lr_decay: 0.95,
            l2: 5e-4,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return invalid_param(format!("lr must be positive, got {}", self.lr));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return invalid_param(format!("{name} must lie in [0, 1), got {b}"));
            }
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return invalid_param(format!("lr_decay must lie in (0, 1], got {}", self.lr_decay));
        }
        if !(self.eps > 0.0) || self.l2 < 0.0 {
            return invalid_param("eps must be positive and l2 non-negative");
        }
        Ok(())
    }

    /// `lr * lr_decay^epoch`.
    pub fn effective_lr(&self, epoch: usize) -> f64 {
        self.lr * self.lr_decay.powi(epoch as i32)
    }
}

/// ADAM state over an ordered list of parameter tensors.
#[derive(Debug, Clone)]
pub struct Adam {
    config: AdamConfig,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    steps: u64,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            first: Vec::new(),
            second: Vec::new(),
            steps: 0,
        })
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// One bias-corrected update. Tensors must arrive in the same order and
    /// with the same lengths on every call.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]], epoch: usize) -> Result<()> {
        if params.len() != grads.len() {
            return invalid_param("parameter and gradient lists differ in length");
        }
        if grads.iter().any(|g| g.iter().any(|v| !v.is_finite())) {
            return Err(Error::Diverged {
                epoch,
                detail: "non-finite gradient".into(),
            });
        }
        if self.first.is_empty() {
            self.first = params.iter().map(|p| vec![0.0; p.len()]).collect();
            self.second = self.first.clone();
        }
        if self.first.len() != params.len()
            || self.first.iter().zip(params.iter()).any(|(m, p)| m.len() != p.len())
        {
            return invalid_param("parameter shapes changed between ADAM steps");
        }
        self.steps += 1;
        let AdamConfig {
            beta1, beta2, eps, ..
        } = self.config;
        let lr = self.config.effective_lr(epoch);
        let c1 = 1.0 - beta1.powf(self.steps as f64);
        let c2 = 1.0 - beta2.powf(self.steps as f64);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(self.first.iter_mut())
            .zip(self.second.iter_mut())
        {
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
                v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
