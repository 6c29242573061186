use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{invalid_param, Result};
use crate::nncore::{Activation, AdamConfig};
use crate::noise::{NoiseKind, NoiseSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arch {
    Gcn,
    RgcnRldae,
    RgcnDdae,
    Mvgcn,
    MvrgcnRldae,
    MvrgcnDdae,
}

/// Which autoencoder, if any, sits in front of the graph convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AeKind {
    RobustLowRank,
    Denoising,
}

impl Arch {
    pub const ALL: [Arch; 6] = [
        Arch::Gcn,
        Arch::RgcnRldae,
        Arch::RgcnDdae,
        Arch::Mvgcn,
        Arch::MvrgcnRldae,
        Arch::MvrgcnDdae,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Arch::Gcn => "gcn",
            Arch::RgcnRldae => "rgcn_rldae",
            Arch::RgcnDdae => "rgcn_ddae",
            Arch::Mvgcn => "mvgcn",
            Arch::MvrgcnRldae => "mvrgcn_rldae",
            Arch::MvrgcnDdae => "mvrgcn_ddae",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == s)
    }

    pub fn is_multiview(self) -> bool {
        matches!(self, Arch::Mvgcn | Arch::MvrgcnRldae | Arch::MvrgcnDdae)
    }

    pub fn ae_kind(self) -> Option<AeKind> {
        match self {
            Arch::Gcn | Arch::Mvgcn => None,
            Arch::RgcnRldae | Arch::MvrgcnRldae => Some(AeKind::RobustLowRank),
            Arch::RgcnDdae | Arch::MvrgcnDdae => Some(AeKind::Denoising),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fusion {
    Max,
    Avg,
    /// `max + beta * avg`.
    Mixed(f64),
}

impl Fusion {
    pub fn name(self) -> String {
        match self {
            Fusion::Max => "max".into(),
            Fusion::Avg => "avg".into(),
            Fusion::Mixed(b) => format!("mixed:{b:?}"),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "max" => Some(Fusion::Max),
            "avg" => Some(Fusion::Avg),
            "mixed" => Some(Fusion::Mixed(0.5)),
            _ => s.strip_prefix("mixed:")?.parse().ok().map(Fusion::Mixed),
        }
    }
}

/// One graph convolution layer: `feature_maps` filters of Chebyshev `order`,
/// followed by ReLU and max-pooling by `pool` (a power of two).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvSpec {
    pub feature_maps: usize,
    pub order: usize,
    pub pool: usize,
}

/// Architecture plus training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub arch: Arch,
    pub conv: Vec<ConvSpec>,
    /// Hidden fully connected widths between the convolutions and the fused head.
    pub fc: Vec<usize>,
    /// Encoder widths; the decoder mirrors them.
    pub ae_hidden: Vec<usize>,
    pub ae_activation: Activation,
    /// Use a frozen `W = I` autoencoder instead of a trained one.
    pub ae_frozen_identity: bool,
    pub fusion: Fusion,
    /// Weight of the autoencoder reconstruction term in the joint loss.
    pub eta: f64,
    /// Sparsity trade-off of the robust decomposition.
    pub lambda: f64,
    /// Per-iteration shrink factor of the decomposition threshold, starting
    /// from `max|X|`; `1.0` thresholds at `lambda` throughout.
    pub lambda_decay: f64,
    /// Corruption injected by the denoising autoencoder.
    pub dae_noise: NoiseSpec,
    pub adam: AdamConfig,
    /// Learning rate used while pretraining the autoencoder alone.
    pub ae_lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Autoencoder-only epochs before joint training.
    pub pretrain_epochs: usize,
    pub seed: u64,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            arch: Arch::Gcn,
            conv: vec![ConvSpec {
                feature_maps: 32,
                order: 16,
                pool: 1,
            }],
            fc: Vec::new(),
            ae_hidden: vec![32],
            ae_activation: Activation::Sigmoid,
            ae_frozen_identity: false,
            fusion: Fusion::Max,
            eta: 1.0,
            lambda: 0.1,
            lambda_decay: 1.0,
            dae_noise: NoiseSpec::masking(0.2, 0),
            adam: AdamConfig::default(),
            ae_lr: 0.001,
            epochs: 20,
            batch_size: 100,
            pretrain_epochs: 0,
            seed: 0,
        }
    }
}

/// Keys understood by [`ModelSpec::set`].
pub const MODEL_KEYS: &[&str] = &[
    "arch",
    "conv",
    "fc",
    "ae_hidden",
    "ae_activation",
    "ae_frozen_identity",
    "fusion",
    "eta",
    "lambda",
    "lambda_decay",
    "dae_noise",
    "dae_val",
    "lr",
    "lr_decay",
    "beta1",
    "beta2",
    "eps",
    "l2",
    "ae_lr",
    "epochs",
    "batch_size",
    "pretrain_epochs",
    "seed",
];

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .or_else(|_| invalid_param(format!("{key}: cannot parse {v:?}")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<usize>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

impl ModelSpec {
    /// Number of coarsening levels the pooling layers need.
    pub fn coarsening_levels(&self) -> usize {
        self.conv.iter().map(|c| c.pool.trailing_zeros() as usize).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.conv.is_empty() {
            return invalid_param("need at least one graph convolution layer");
        }
        for c in &self.conv {
            if c.feature_maps == 0 || c.order == 0 {
                return invalid_param("convolution feature maps and order must be positive");
            }
            if !c.pool.is_power_of_two() {
                return invalid_param(format!("pool size {} is not a power of two", c.pool));
            }
        }
        if self.fc.contains(&0) {
            return invalid_param("fully connected widths must be positive");
        }
        if self.arch.ae_kind().is_some() && self.ae_hidden.is_empty() && !self.ae_frozen_identity {
            return invalid_param(format!("{} needs autoencoder hidden layers", self.arch.name()));
        }
        if let Fusion::Mixed(b) = self.fusion {
            if !(0.0..=1.0).contains(&b) {
                return invalid_param(format!("mixed fusion beta must lie in [0, 1], got {b}"));
            }
        }
        if self.eta < 0.0 || !self.eta.is_finite() {
            return invalid_param("eta must be finite and non-negative");
        }
        if !(self.lambda > 0.0) {
            return invalid_param("lambda must be positive");
        }
        if !(self.lambda_decay > 0.0 && self.lambda_decay <= 1.0) {
            return invalid_param("lambda_decay must lie in (0, 1]");
        }
        if self.batch_size == 0 {
            return invalid_param("batch_size must be positive");
        }
        if !(self.ae_lr > 0.0) {
            return invalid_param("ae_lr must be positive");
        }
        self.dae_noise.validate()?;
        self.adam.validate()
    }

    /// Sets one `key = value` entry.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "arch" => {
                self.arch = Arch::parse(v).ok_or_else(|| {
                    crate::Error::InvalidParameter(format!("unknown arch {v:?}"))
                })?
            }
            "conv" => {
                self.conv = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|layer| {
                        let parts: Vec<&str> = layer.split(':').collect();
                        match parts.as_slice() {
                            [k, s, p] => Ok(ConvSpec {
                                feature_maps: parse_num(key, k)?,
                                order: parse_num(key, s)?,
                                pool: parse_num(key, p)?,
                            }),
                            _ => invalid_param(format!("conv layer {layer:?} is not k:s:pool")),
                        }
                    })
                    .collect::<Result<_>>()?
            }
            "fc" => self.fc = parse_list(key, v)?,
            "ae_hidden" => self.ae_hidden = parse_list(key, v)?,
            "ae_activation" => {
                self.ae_activation = Activation::parse(v).ok_or_else(|| {
                    crate::Error::InvalidParameter(format!("unknown activation {v:?}"))
                })?
            }
            "ae_frozen_identity" => self.ae_frozen_identity = parse_num(key, v)?,
            "fusion" => {
                self.fusion = Fusion::parse(v)
                    .ok_or_else(|| crate::Error::InvalidParameter(format!("unknown fusion {v:?}")))?
            }
            "eta" => self.eta = parse_num(key, v)?,
            "lambda" => self.lambda = parse_num(key, v)?,
            "lambda_decay" => self.lambda_decay = parse_num(key, v)?,
            "dae_noise" => {
                let (kind, level) = v
                    .split_once(':')
                    .ok_or_else(|| crate::Error::InvalidParameter(format!("dae_noise {v:?} is not kind:level")))?;
                self.dae_noise.kind = NoiseKind::parse(kind)
                    .ok_or_else(|| crate::Error::InvalidParameter(format!("unknown noise kind {kind:?}")))?;
                self.dae_noise.level = parse_num(key, level)?;
            }
            "dae_val" => self.dae_noise.val = parse_num(key, v)?,
            "lr" => self.adam.lr = parse_num(key, v)?,
            "lr_decay" => self.adam.lr_decay = parse_num(key, v)?,
            "beta1" => self.adam.beta1 = parse_num(key, v)?,
            "beta2" => self.adam.beta2 = parse_num(key, v)?,
            "eps" => self.adam.eps = parse_num(key, v)?,
            "l2" => self.adam.l2 = parse_num(key, v)?,
            "ae_lr" => self.ae_lr = parse_num(key, v)?,
            "epochs" => self.epochs = parse_num(key, v)?,
            "batch_size" => self.batch_size = parse_num(key, v)?,
            "pretrain_epochs" => self.pretrain_epochs = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            _ => return invalid_param(format!("unknown model key {key:?}")),
        }
        Ok(())
    }

    /// Every key with its value, in [`MODEL_KEYS`] order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let conv = self
            .conv
            .iter()
            .map(|c| format!("{}:{}:{}", c.feature_maps, c.order, c.pool))
            .collect::<Vec<_>>()
            .join(",");
        let values = [
            self.arch.name().to_string(),
            conv,
            join(&self.fc),
            join(&self.ae_hidden),
            self.ae_activation.name().to_string(),
            self.ae_frozen_identity.to_string(),
            self.fusion.name(),
            format!("{:?}", self.eta),
            format!("{:?}", self.lambda),
            format!("{:?}", self.lambda_decay),
            format!("{}:{:?}", self.dae_noise.kind.name(), self.dae_noise.level),
            format!("{:?}", self.dae_noise.val),
            format!("{:?}", self.adam.lr),
            format!("{:?}", self.adam.lr_decay),
            format!("{:?}", self.adam.beta1),
            format!("{:?}", self.adam.beta2),
            format!("{:?}", self.adam.eps),
            format!("{:?}", self.adam.l2),
            format!("{:?}", self.ae_lr),
            self.epochs.to_string(),
            self.batch_size.to_string(),
            self.pretrain_epochs.to_string(),
            self.seed.to_string(),
        ];
        MODEL_KEYS.iter().copied().zip(values).collect()
    }

    /// `key = value` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Parses `key = value` lines; `#` starts a comment. Unknown keys are rejected.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut spec = Self::default();
        for (k, v) in parse_key_values(text)? {
            spec.set(&k, &v)?;
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// `key = value` lines with `#` comments, in file order. Later duplicates win.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return invalid_param(format!("line {}: expected key = value, got {raw:?}", lineno + 1));
        };
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}
