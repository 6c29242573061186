use ndarray::{Array1, Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid_data, invalid_param, Result};
use crate::nncore::{Activation, DenseGrads, DenseLayer};

/// Layer widths and activation of a deep autoencoder.
///
/// `layer_sizes` lists every width from input to output, e.g.
/// `[M, 5000, 350, 5000, M]`. Hidden layers share one activation and the
/// output layer is linear.
#[derive(Debug, Clone, PartialEq)]
pub struct AeSpec {
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
    pub seed: u64,
    /// Start from `W = I`, `b = 0` (needs every width equal).
    pub identity_init: bool,
    /// Never update the weights during training.
    pub frozen: bool,
}

impl AeSpec {
    /// `[m, hidden..., reversed hidden..., m]`.
    pub fn mirrored(m: usize, hidden: &[usize], activation: Activation, seed: u64) -> Self {
        let mut layer_sizes = vec![m];
        layer_sizes.extend_from_slice(hidden);
        layer_sizes.extend(hidden.iter().rev().skip(1));
        layer_sizes.push(m);
        Self {
            layer_sizes,
            activation,
            seed,
            identity_init: false,
            frozen: false,
        }
    }

    /// A fixed, frozen `W = I` autoencoder with one hidden layer of width `m`.
    pub fn frozen_identity(m: usize) -> Self {
        Self {
            layer_sizes: vec![m, m, m],
            activation: Activation::Identity,
            seed: 0,
            identity_init: true,
            frozen: true,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn num_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn validate(&self) -> Result<()> {
        let sizes = &self.layer_sizes;
        if sizes.len() < 3 {
            return invalid_param("an autoencoder needs at least one hidden layer");
        }
        if sizes.contains(&0) {
            return invalid_param("layer widths must be positive");
        }
        if sizes[0] != sizes[sizes.len() - 1] {
            return invalid_param(format!(
                "input width {} differs from output width {}",
                sizes[0],
                sizes[sizes.len() - 1]
            ));
        }
        if self.identity_init && sizes.iter().any(|&s| s != sizes[0]) {
            return invalid_param("identity initialization needs equal layer widths");
        }
        Ok(())
    }

    /// Weight and bias count.
    pub fn num_params(&self) -> usize {
        self.layer_sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder {
    pub spec: AeSpec,
    pub layers: Vec<DenseLayer>,
}

/// Activations of every layer, input first.
#[derive(Debug, Clone)]
pub struct AeCache {
    pub activations: Vec<Array2<f64>>,
}

impl AeCache {
    pub fn output(&self) -> &Array2<f64> {
        self.activations.last().expect("cache holds the input")
    }
}

#[derive(Debug, Clone)]
pub struct AeGrads {
    pub layers: Vec<DenseGrads>,
}

impl AeGrads {
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for g in &self.layers {
            out.push(g.weight.as_slice().expect("standard layout"));
            out.push(g.bias.as_slice().expect("standard layout"));
        }
        out
    }

    pub fn input(&self) -> &Array2<f64> {
        &self.layers[0].input
    }
}

impl Autoencoder {
    pub fn new(spec: AeSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let last = spec.num_layers() - 1;
        let layers = spec
            .layer_sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let act = if i == last {
                    Activation::Identity
                } else {
                    spec.activation
                };
                if spec.identity_init {
                    DenseLayer::new(Array2::eye(w[0]), Array1::zeros(w[1]), act, 0.0)
                } else {
                    DenseLayer::random(&mut rng, w[0], w[1], act, 0.0)
                }
            })
            .collect();
        Ok(Self { spec, layers })
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim()
    }

    pub fn forward_cached(&self, x: ArrayView2<f64>) -> Result<AeCache> {
        if x.ncols() != self.input_dim() {
            return invalid_data(format!(
                "autoencoder expects {} columns, got {}",
                self.input_dim(),
                x.ncols()
            ));
        }
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.to_owned());
        for layer in &self.layers {
            let y = layer.forward(activations.last().unwrap().view())?;
            activations.push(y);
        }
        Ok(AeCache { activations })
    }

    /// Gradients of every layer given `dL/d output`.
    pub fn backward(&self, cache: &AeCache, grad_out: ArrayView2<f64>) -> Result<AeGrads> {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut upstream = grad_out.to_owned();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let g = layer.backward(
                cache.activations[i].view(),
                cache.activations[i + 1].view(),
                upstream.view(),
            )?;
            upstream = g.input.clone();
            grads.push(g);
        }
        grads.reverse();
        Ok(AeGrads { layers: grads })
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for l in &mut self.layers {
            out.push(l.weight.as_slice_mut().expect("standard layout"));
            out.push(l.bias.as_slice_mut().expect("standard layout"));
        }
        out
    }

    pub fn param_slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for l in &self.layers {
            out.push(l.weight.as_slice().expect("standard layout"));
            out.push(l.bias.as_slice().expect("standard layout"));
        }
        out
    }
}

/// `Dec(Enc(x))`.
pub fn ae_forward(ae: &Autoencoder, x: ArrayView2<f64>) -> Result<Array2<f64>> {
    let (first, rest) = ae.layers.split_first().expect("validated spec");
    let mut h = first.forward(x)?;
    for layer in rest {
        h = layer.forward(h.view())?;
    }
    Ok(h)
}

/// `1/(2B) ||out - target||_F^2` and its gradient w.r.t. `out`.
pub fn reconstruction_loss(out: ArrayView2<f64>, target: ArrayView2<f64>) -> (f64, Array2<f64>) {
    let scale = 1.0 / out.nrows().max(1) as f64;
    let diff = &out - &target;
    let loss = 0.5 * scale * diff.iter().map(|d| d * d).sum::<f64>();
    (loss, diff * scale)
}
