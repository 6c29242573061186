use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use super::scaled_uniform;
use crate::error::{invalid_data, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    Sigmoid,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        }
    }

    /// Derivative expressed through the activation output `y`.
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "identity" | "linear" => Some(Activation::Identity),
            "relu" => Some(Activation::Relu),
            "sigmoid" => Some(Activation::Sigmoid),
            _ => None,
        }
    }
}

/// `y = act(x W + b)` with an optional `l2/2 ||W||^2` penalty.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
    pub l2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub input: Array2<f64>,
}

impl DenseLayer {
    pub fn new(weight: Array2<f64>, bias: Array1<f64>, activation: Activation, l2: f64) -> Self {
        assert_eq!(weight.ncols(), bias.len(), "bias length must match output width");
        Self {
            weight,
            bias,
            activation,
            l2,
        }
    }

    pub fn random<R: Rng>(rng: &mut R, f_in: usize, f_out: usize, activation: Activation, l2: f64) -> Self {
        let weight = Array2::from_shape_simple_fn((f_in, f_out), || scaled_uniform(rng, f_in));
        let bias = Array1::from_shape_simple_fn(f_out, || scaled_uniform(rng, f_in));
        Self::new(weight, bias, activation, l2)
    }

    pub fn f_in(&self) -> usize {
        self.weight.nrows()
    }

    pub fn f_out(&self) -> usize {
        self.weight.ncols()
    }

    pub fn num_params(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.f_in() {
            return invalid_data(format!(
                "dense layer expects {} inputs, got {}",
                self.f_in(),
                x.ncols()
            ));
        }
        let mut y = x.dot(&self.weight);
        y += &self.bias;
        let act = self.activation;
        if act != Activation::Identity {
            y.mapv_inplace(|z| act.apply(z));
        }
        Ok(y)
    }

    /// Gradients given the input `x`, this layer's output `y` and `dL/dy`.
    pub fn backward(&self, x: ArrayView2<f64>, y: ArrayView2<f64>, grad_out: ArrayView2<f64>) -> Result<DenseGrads> {
        if grad_out.dim() != y.dim() || x.nrows() != y.nrows() || x.ncols() != self.f_in() {
            return invalid_data("dense backward shapes disagree");
        }
        let act = self.activation;
        let dz = if act == Activation::Identity {
            grad_out.to_owned()
        } else {
            let mut dz = grad_out.to_owned();
            dz.zip_mut_with(&y, |g, &yv| *g *= act.derivative_from_output(yv));
            dz
        };
        let mut weight = x.t().dot(&dz);
        if self.l2 != 0.0 {
            weight.scaled_add(self.l2, &self.weight);
        }
        Ok(DenseGrads {
            weight,
            bias: dz.sum_axis(Axis(0)),
            input: dz.dot(&self.weight.t()),
        })
    }

    /// `l2/2 ||W||^2`.
    pub fn penalty(&self) -> f64 {
        if self.l2 == 0.0 {
            0.0
        } else {
            0.5 * self.l2 * self.weight.iter().map(|w| w * w).sum::<f64>()
        }
    }
}

/// Forward pass and, when `grad_out` is given, the backward pass.
pub fn dense_forward_backward(
    layer: &DenseLayer,
    x: ArrayView2<f64>,
    grad_out: Option<ArrayView2<f64>>,
) -> Result<(Array2<f64>, Option<DenseGrads>)> {
    let y = layer.forward(x)?;
    let grads = match grad_out {
        Some(g) => Some(layer.backward(x, y.view(), g)?),
        None => None,
    };
    Ok((y, grads))
}
