use ndarray::{Array1, Array2, Array3, ArrayView2, Axis};
use rand::Rng;

use super::spec::ConvSpec;
use crate::error::{invalid_data, Result};
use crate::graph::{
    coarsen, estimate_lambda_max, normalized_laplacian, rescale_laplacian, Laplacian, SparseGraph,
    LAMBDA_MAX_ITERS, LAMBDA_MAX_TOL,
};
use crate::nncore::{Activation, DenseLayer};
use crate::spectral::{
    cheb_basis, cheb_conv_backward, cheb_conv_forward, graph_max_pool_with_argmax, graph_max_unpool,
    ChebParams, SignalBatch,
};

/// Rescaled Laplacian of `g` with a power-iteration `lambda_max`.
pub fn rescaled_laplacian(g: &SparseGraph) -> Result<Laplacian> {
    let l = normalized_laplacian(g);
    let lambda = estimate_lambda_max(&l, LAMBDA_MAX_ITERS, LAMBDA_MAX_TOL);
    rescale_laplacian(&l, lambda)
}

#[derive(Debug, Clone)]
pub(crate) struct ConvLayer {
    pub params: ChebParams,
    pub bias: Array1<f64>,
    pub pool: usize,
    /// Index into `Tower::laplacians` / `Tower::fake`.
    pub level: usize,
}

/// Graph-level inputs of a tower: padded layout and one Laplacian per level.
#[derive(Debug, Clone)]
pub(crate) struct GraphLevels {
    pub n: usize,
    /// Position `p` of the padded level-0 signal holds vertex `layout[p]` (fake when `>= n`).
    pub layout: Option<Vec<usize>>,
    pub laplacians: Vec<Laplacian>,
    pub fake: Vec<Vec<bool>>,
}

impl GraphLevels {
    pub fn new(g: &SparseGraph, levels: usize, seed: u64) -> Result<Self> {
        if levels == 0 {
            return Ok(Self {
                n: g.n(),
                layout: None,
                laplacians: vec![rescaled_laplacian(g)?],
                fake: vec![vec![false; g.n()]],
            });
        }
        let map = coarsen(g, levels, seed);
        let mut laplacians = Vec::with_capacity(levels + 1);
        let mut fake = Vec::with_capacity(levels + 1);
        for lv in 0..=levels {
            laplacians.push(rescaled_laplacian(&map.permuted_graph(lv))?);
            fake.push(map.fake_mask(lv));
        }
        Ok(Self {
            n: g.n(),
            layout: Some(map.perm.clone()),
            laplacians,
            fake,
        })
    }

    pub fn padded_len(&self, level: usize) -> usize {
        self.laplacians[level].n()
    }
}

/// Convolution stack of one view: Chebyshev convolutions with ReLU and
/// graph max-pooling, flattened into optional hidden dense layers.
#[derive(Debug, Clone)]
pub(crate) struct Tower {
    pub graph: GraphLevels,
    pub convs: Vec<ConvLayer>,
    pub fc: Vec<DenseLayer>,
}

#[derive(Debug, Clone)]
pub(crate) struct TowerCache {
    bases: Vec<Vec<SignalBatch>>,
    activations: Vec<SignalBatch>,
    argmax: Vec<Option<Array3<usize>>>,
    flat_dims: (usize, usize, usize),
    fc_inputs: Vec<Array2<f64>>,
    fc_outputs: Vec<Array2<f64>>,
}

pub(crate) struct TowerGrads {
    pub tensors: Vec<Vec<f64>>,
    pub input: Option<Array2<f64>>,
}

impl Tower {
    pub fn new<R: Rng>(
        rng: &mut R,
        graph: GraphLevels,
        conv: &[ConvSpec],
        fc: &[usize],
        l2: f64,
    ) -> Result<Self> {
        let mut convs = Vec::with_capacity(conv.len());
        let mut f_in = 1;
        let mut level = 0;
        for c in conv {
            let fan_in = f_in * c.order;
            let theta = Array3::from_shape_simple_fn((c.order, f_in, c.feature_maps), || {
                crate::nncore::scaled_uniform(rng, fan_in)
            });
            convs.push(ConvLayer {
                params: ChebParams::new(theta)?,
                bias: Array1::zeros(c.feature_maps),
                pool: c.pool,
                level,
            });
            level += c.pool.trailing_zeros() as usize;
            f_in = c.feature_maps;
        }
        let mut width = graph.padded_len(level) * f_in;
        let mut layers = Vec::with_capacity(fc.len());
        for &w in fc {
            layers.push(DenseLayer::random(rng, width, w, Activation::Relu, l2));
            width = w;
        }
        Ok(Self {
            graph,
            convs,
            fc: layers,
        })
    }

    pub fn out_dim(&self) -> usize {
        match self.fc.last() {
            Some(l) => l.f_out(),
            None => {
                let last = self.convs.last().expect("at least one conv");
                let level = last.level + last.pool.trailing_zeros() as usize;
                self.graph.padded_len(level) * last.params.f_out()
            }
        }
    }

    fn embed(&self, x: ArrayView2<f64>) -> SignalBatch {
        match &self.graph.layout {
            None => SignalBatch::from_rows(x),
            Some(layout) => {
                let n = self.graph.n;
                let mut data = Array3::zeros((x.nrows(), layout.len(), 1));
                for (p, &v) in layout.iter().enumerate() {
                    if v < n {
                        data.slice_mut(ndarray::s![.., p, 0]).assign(&x.column(v));
                    }
                }
                SignalBatch::new(data)
            }
        }
    }

    fn unembed(&self, g: &SignalBatch) -> Array2<f64> {
        let b = g.batch();
        match &self.graph.layout {
            None => g
                .data
                .clone()
                .into_shape_with_order((b, self.graph.n))
                .expect("single feature map"),
            Some(layout) => {
                let mut out = Array2::zeros((b, self.graph.n));
                for (p, &v) in layout.iter().enumerate() {
                    if v < self.graph.n {
                        out.column_mut(v).assign(&g.data.slice(ndarray::s![.., p, 0]));
                    }
                }
                out
            }
        }
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Result<(Array2<f64>, TowerCache)> {
        if x.ncols() != self.graph.n {
            return invalid_data(format!(
                "tower expects {} features, got {}",
                self.graph.n,
                x.ncols()
            ));
        }
        let mut h = self.embed(x);
        let mut cache = TowerCache {
            bases: Vec::with_capacity(self.convs.len()),
            activations: Vec::with_capacity(self.convs.len()),
            argmax: Vec::with_capacity(self.convs.len()),
            flat_dims: (0, 0, 0),
            fc_inputs: Vec::new(),
            fc_outputs: Vec::new(),
        };
        for conv in &self.convs {
            let basis = cheb_basis(&self.graph.laplacians[conv.level], &h, conv.params.order())?;
            let mut y = cheb_conv_forward(&basis, &conv.params)?;
            y.data += &conv.bias;
            y.data.mapv_inplace(|v| v.max(0.0));
            let fake = &self.graph.fake[conv.level];
            for (v, _) in fake.iter().enumerate().filter(|(_, &f)| f) {
                y.data.index_axis_mut(Axis(1), v).fill(0.0);
            }
            if conv.pool > 1 {
                let mut masked = y.clone();
                for (v, _) in fake.iter().enumerate().filter(|(_, &f)| f) {
                    masked.data.index_axis_mut(Axis(1), v).fill(f64::NEG_INFINITY);
                }
                let (mut pooled, arg) = graph_max_pool_with_argmax(&masked, conv.pool)?;
                pooled.data.mapv_inplace(|v| if v == f64::NEG_INFINITY { 0.0 } else { v });
                h = pooled;
                cache.argmax.push(Some(arg));
            } else {
                h = y.clone();
                cache.argmax.push(None);
            }
            cache.bases.push(basis);
            cache.activations.push(y);
        }
        let (b, n, f) = h.data.dim();
        cache.flat_dims = (b, n, f);
        let mut flat = h.data.into_shape_with_order((b, n * f)).expect("standard layout");
        for layer in &self.fc {
            let out = layer.forward(flat.view())?;
            cache.fc_inputs.push(flat);
            cache.fc_outputs.push(out.clone());
            flat = out;
        }
        Ok((flat, cache))
    }

    /// Parameter gradients in [`Tower::param_slices`] order, plus the input
    /// gradient when `want_input` is set.
    pub fn backward(&self, cache: &TowerCache, grad: ArrayView2<f64>, want_input: bool) -> Result<TowerGrads> {
        let mut fc_grads = Vec::with_capacity(self.fc.len());
        let mut g = grad.to_owned();
        for (i, layer) in self.fc.iter().enumerate().rev() {
            let lg = layer.backward(cache.fc_inputs[i].view(), cache.fc_outputs[i].view(), g.view())?;
            g = lg.input;
            fc_grads.push((lg.weight, lg.bias));
        }
        fc_grads.reverse();
        let mut gs = SignalBatch::new(g.into_shape_with_order(cache.flat_dims).expect("flat gradient"));
        let mut conv_grads = Vec::with_capacity(self.convs.len());
        for (i, conv) in self.convs.iter().enumerate().rev() {
            let y = &cache.activations[i];
            if let Some(arg) = &cache.argmax[i] {
                gs = graph_max_unpool(&gs, arg, y.n());
            }
            gs.data.zip_mut_with(&y.data, |g, &v| {
                if v <= 0.0 {
                    *g = 0.0;
                }
            });
            let bias = gs.data.sum_axis(Axis(0)).sum_axis(Axis(0));
            let l_hat = &self.graph.laplacians[conv.level];
            if i == 0 && !want_input {
                let (theta, _) = cheb_conv_backward(l_hat, &cache.bases[i], &conv.params, &gs)?;
                conv_grads.push((theta, bias));
                break;
            }
            let (theta, gx) = cheb_conv_backward(l_hat, &cache.bases[i], &conv.params, &gs)?;
            conv_grads.push((theta, bias));
            gs = gx;
        }
        conv_grads.reverse();
        let mut tensors = Vec::with_capacity(2 * (self.convs.len() + self.fc.len()));
        for (theta, bias) in conv_grads {
            tensors.push(theta.as_standard_layout().iter().copied().collect());
            tensors.push(bias.to_vec());
        }
        for (w, b) in fc_grads {
            tensors.push(w.as_standard_layout().iter().copied().collect());
            tensors.push(b.to_vec());
        }
        Ok(TowerGrads {
            tensors,
            input: want_input.then(|| self.unembed(&gs)),
        })
    }

    pub fn penalty(&self) -> f64 {
        self.fc.iter().map(DenseLayer::penalty).sum()
    }

    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for c in &self.convs {
            let (s, i, j) = c.params.theta.dim();
            out.push(vec![s, i, j]);
            out.push(vec![c.bias.len()]);
        }
        for l in &self.fc {
            out.push(vec![l.f_in(), l.f_out()]);
            out.push(vec![l.f_out()]);
        }
        out
    }

    pub fn param_slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for c in &self.convs {
            out.push(c.params.theta.as_slice().expect("standard layout"));
            out.push(c.bias.as_slice().expect("standard layout"));
        }
        for l in &self.fc {
            out.push(l.weight.as_slice().expect("standard layout"));
            out.push(l.bias.as_slice().expect("standard layout"));
        }
        out
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for c in &mut self.convs {
            out.push(c.params.theta.as_slice_mut().expect("standard layout"));
            out.push(c.bias.as_slice_mut().expect("standard layout"));
        }
        for l in &mut self.fc {
            out.push(l.weight.as_slice_mut().expect("standard layout"));
            out.push(l.bias.as_slice_mut().expect("standard layout"));
        }
        out
    }
}
