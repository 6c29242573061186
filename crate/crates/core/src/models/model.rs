use ndarray::{Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::fusion::{fuse_views, fuse_views_backward};
use super::spec::{AeKind, ModelSpec};
use super::tower::{GraphLevels, Tower, TowerCache};
use crate::autoencoder::{ae_forward, reconstruction_loss, AeCache, AeSpec, Autoencoder};
use crate::error::{invalid_data, invalid_param, Result};
use crate::graph::SparseGraph;
use crate::nncore::{gradcheck, softmax_xent, Activation, DenseLayer, GradcheckConfig, GradcheckReport, LabelSet};

/// Independent random streams derived from the model seed.
pub(crate) mod stream {
    pub const INIT: u64 = 0;
    pub const SHUFFLE: u64 = 1;
    pub const CORRUPTION: u64 = 2;
    pub const AUTOENCODER: u64 = 3;
}

pub(crate) fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Shapes of every parameter tensor, in checkpoint order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelPlan {
    pub tensors: Vec<(String, Vec<usize>)>,
}

impl ModelPlan {
    pub fn num_params(&self) -> usize {
        self.tensors.iter().map(|(_, s)| s.iter().product::<usize>()).sum()
    }
}

impl ModelSpec {
    /// Parameter shapes for views whose padded level-0 vertex counts are
    /// `padded_vertices` (each a multiple of `2^coarsening_levels`), computed
    /// without allocating the model.
    pub fn plan(&self, padded_vertices: &[usize], input_dims: &[usize], num_classes: usize) -> Result<ModelPlan> {
        self.validate()?;
        check_views(self, padded_vertices.len())?;
        if input_dims.len() != padded_vertices.len() {
            return invalid_param("need one input dimension per view");
        }
        let mut tensors = Vec::new();
        let mut fused = None;
        for (v, &n0) in padded_vertices.iter().enumerate() {
            let mut n = n0;
            let mut f_in = 1;
            for (i, c) in self.conv.iter().enumerate() {
                tensors.push((format!("view{v}.conv{i}.theta"), vec![c.order, f_in, c.feature_maps]));
                tensors.push((format!("view{v}.conv{i}.bias"), vec![c.feature_maps]));
                if n % c.pool != 0 {
                    return invalid_param(format!("{n} vertices cannot be pooled by {}", c.pool));
                }
                n /= c.pool;
                f_in = c.feature_maps;
            }
            let mut width = n * f_in;
            for (i, &w) in self.fc.iter().enumerate() {
                tensors.push((format!("view{v}.fc{i}.weight"), vec![width, w]));
                tensors.push((format!("view{v}.fc{i}.bias"), vec![w]));
                width = w;
            }
            match fused {
                None => fused = Some(width),
                Some(d) if d != width => {
                    return invalid_param(format!(
                        "view {v} produces {width} features, earlier views {d}; add fc layers to align them"
                    ))
                }
                _ => {}
            }
        }
        if self.arch.ae_kind().is_some() {
            for (v, &m) in input_dims.iter().enumerate() {
                let sizes = self.ae_spec(m, v).layer_sizes;
                for (i, w) in sizes.windows(2).enumerate() {
                    tensors.push((format!("view{v}.ae{i}.weight"), vec![w[0], w[1]]));
                    tensors.push((format!("view{v}.ae{i}.bias"), vec![w[1]]));
                }
            }
        }
        let d = fused.expect("at least one view");
        tensors.push(("head.weight".into(), vec![d, num_classes]));
        tensors.push(("head.bias".into(), vec![num_classes]));
        Ok(ModelPlan { tensors })
    }

    /// Autoencoder spec for view `v` with `m` input features.
    pub fn ae_spec(&self, m: usize, v: usize) -> AeSpec {
        if self.ae_frozen_identity {
            return AeSpec::frozen_identity(m);
        }
        let mut seed_rng = rng_stream(self.seed, stream::AUTOENCODER + v as u64);
        AeSpec::mirrored(m, &self.ae_hidden, self.ae_activation, rand::Rng::random(&mut seed_rng))
    }
}

fn check_views(spec: &ModelSpec, views: usize) -> Result<()> {
    if views == 0 {
        return invalid_param("need at least one view");
    }
    if !spec.arch.is_multiview() && views != 1 {
        return invalid_param(format!("{} takes exactly one view, got {views}", spec.arch.name()));
    }
    Ok(())
}

/// A built RGCN / MVRGCN: one tower (and optional autoencoder) per view,
/// fused into a shared softmax head.
#[derive(Debug, Clone)]
pub struct Model {
    pub spec: ModelSpec,
    pub(crate) towers: Vec<Tower>,
    pub(crate) aes: Vec<Autoencoder>,
    pub(crate) head: DenseLayer,
    num_classes: usize,
}

/// Loss terms of one mini-batch.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BatchLoss {
    pub ce: f64,
    pub ae: f64,
    pub penalty: f64,
    pub total: f64,
}

pub(crate) struct BatchGrads {
    /// One entry per tensor in `Model::param_slices` order.
    pub tensors: Vec<Vec<f64>>,
}

struct ViewCache {
    ae: Option<AeCache>,
    ae_target: Option<Array2<f64>>,
    tower: TowerCache,
    features: Array2<f64>,
}

/// Builds the model for the given per-view graphs (vertices = input features).
pub fn build_model(spec: &ModelSpec, graphs: &[SparseGraph], num_classes: usize) -> Result<Model> {
    spec.validate()?;
    check_views(spec, graphs.len())?;
    if num_classes < 2 {
        return invalid_param("need at least two classes");
    }
    let levels = spec.coarsening_levels();
    let mut init = rng_stream(spec.seed, stream::INIT);
    let mut towers = Vec::with_capacity(graphs.len());
    for g in graphs {
        let graph = GraphLevels::new(g, levels, spec.seed)?;
        towers.push(Tower::new(&mut init, graph, &spec.conv, &spec.fc, spec.adam.l2)?);
    }
    let padded: Vec<usize> = towers.iter().map(|t| t.graph.padded_len(0)).collect();
    let dims: Vec<usize> = graphs.iter().map(SparseGraph::n).collect();
    let plan = spec.plan(&padded, &dims, num_classes)?;
    let d = towers[0].out_dim();
    let head = DenseLayer::random(&mut init, d, num_classes, Activation::Identity, spec.adam.l2);
    let aes = if spec.arch.ae_kind().is_some() {
        dims.iter()
            .enumerate()
            .map(|(v, &m)| Autoencoder::new(spec.ae_spec(m, v)))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let model = Model {
        spec: spec.clone(),
        towers,
        aes,
        head,
        num_classes,
    };
    debug_assert_eq!(model.param_shapes(), plan.tensors.iter().map(|t| t.1.clone()).collect::<Vec<_>>());
    log::info!("{} with {} parameters", spec.arch.name(), plan.num_params());
    Ok(model)
}

impl Model {
    pub fn num_views(&self) -> usize {
        self.towers.len()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn input_dims(&self) -> Vec<usize> {
        self.towers.iter().map(|t| t.graph.n).collect()
    }

    pub fn autoencoders(&self) -> &[Autoencoder] {
        &self.aes
    }

    pub fn ae_trainable(&self) -> bool {
        self.aes.iter().any(|a| !a.spec.frozen)
    }

    pub fn num_params(&self) -> usize {
        self.param_slices().iter().map(|s| s.len()).sum()
    }

    /// Towers, then autoencoders, then the head.
    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self.towers.iter().flat_map(Tower::param_shapes).collect();
        for ae in &self.aes {
            for l in &ae.layers {
                out.push(vec![l.f_in(), l.f_out()]);
                out.push(vec![l.f_out()]);
            }
        }
        out.push(vec![self.head.f_in(), self.head.f_out()]);
        out.push(vec![self.head.f_out()]);
        out
    }

    pub fn param_slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = self.towers.iter().flat_map(Tower::param_slices).collect();
        for ae in &self.aes {
            out.extend(ae.param_slices());
        }
        out.push(self.head.weight.as_slice().expect("standard layout"));
        out.push(self.head.bias.as_slice().expect("standard layout"));
        out
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = self.towers.iter_mut().flat_map(Tower::param_slices_mut).collect();
        for ae in &mut self.aes {
            out.extend(ae.param_slices_mut());
        }
        out.push(self.head.weight.as_slice_mut().expect("standard layout"));
        out.push(self.head.bias.as_slice_mut().expect("standard layout"));
        out
    }

    /// Which tensors of [`Model::param_slices`] the optimizer updates.
    pub fn trainable_mask(&self) -> Vec<bool> {
        let mut out: Vec<bool> = self
            .towers
            .iter()
            .flat_map(|t| vec![true; t.param_shapes().len()])
            .collect();
        for ae in &self.aes {
            out.extend(std::iter::repeat_n(!ae.spec.frozen, 2 * ae.layers.len()));
        }
        out.extend([true, true]);
        out
    }

    /// All parameters concatenated in declaration order.
    pub fn flat_params(&self) -> Vec<f64> {
        self.param_slices().concat()
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        let total: usize = self.param_slices().iter().map(|s| s.len()).sum();
        if flat.len() != total {
            return invalid_data(format!("expected {total} parameters, got {}", flat.len()));
        }
        let mut at = 0;
        for s in self.param_slices_mut() {
            s.copy_from_slice(&flat[at..at + s.len()]);
            at += s.len();
        }
        Ok(())
    }

    fn check_inputs(&self, xs: &[ArrayView2<f64>]) -> Result<usize> {
        if xs.len() != self.num_views() {
            return invalid_data(format!("model has {} views, got {}", self.num_views(), xs.len()));
        }
        let n = xs[0].nrows();
        for (x, t) in xs.iter().zip(&self.towers) {
            if x.nrows() != n {
                return invalid_data("views have different sample counts");
            }
            if x.ncols() != t.graph.n {
                return invalid_data(format!("view expects {} features, got {}", t.graph.n, x.ncols()));
            }
        }
        Ok(n)
    }

    /// What the tower of view `v` sees at inference: `D(E(x))` behind an
    /// autoencoder, `x` otherwise.
    pub fn clean_input(&self, v: usize, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        match self.aes.get(v) {
            Some(ae) => ae_forward(ae, x),
            None => Ok(x.to_owned()),
        }
    }

    /// Class scores for every row.
    pub fn logits(&self, xs: &[ArrayView2<f64>]) -> Result<Array2<f64>> {
        let n = self.check_inputs(xs)?;
        let mut out = Array2::zeros((n, self.num_classes));
        let chunk = self.spec.batch_size.max(1);
        let mut start = 0;
        while start < n {
            let end = (start + chunk).min(n);
            let mut feats = Vec::with_capacity(xs.len());
            for (v, x) in xs.iter().enumerate() {
                let rows = x.slice(ndarray::s![start..end, ..]);
                let z = self.clean_input(v, rows)?;
                feats.push(self.towers[v].forward(z.view())?.0);
            }
            let views: Vec<ArrayView2<f64>> = feats.iter().map(|f| f.view()).collect();
            let fused = fuse_views(&views, self.spec.fusion)?;
            out.slice_mut(ndarray::s![start..end, ..]).assign(&self.head.forward(fused.view())?);
            start = end;
        }
        Ok(out)
    }

    /// Argmax class per row, ties to the lowest index.
    pub fn predict(&self, xs: &[ArrayView2<f64>]) -> Result<Vec<usize>> {
        let logits = self.logits(xs)?;
        Ok(logits
            .rows()
            .into_iter()
            .map(|r| {
                let mut best = 0;
                for (k, &v) in r.iter().enumerate() {
                    if v > r[best] {
                        best = k;
                    }
                }
                best
            })
            .collect())
    }

    /// Joint loss and gradients for one mini-batch.
    ///
    /// `inputs[v]` feeds view `v`'s autoencoder (or tower) and `targets[v]`
    /// is the reconstruction target; `labels` may leave rows unlabeled.
    pub(crate) fn batch_loss(
        &self,
        inputs: &[Array2<f64>],
        targets: &[Array2<f64>],
        labels: Option<&LabelSet>,
        want_grads: bool,
    ) -> Result<(BatchLoss, Option<BatchGrads>)> {
        let eta = self.spec.eta;
        let mut caches = Vec::with_capacity(inputs.len());
        let mut ae_loss = 0.0;
        let mut ae_grads_out = Vec::with_capacity(inputs.len());
        for (v, input) in inputs.iter().enumerate() {
            let (ae_cache, z, recon_grad) = match self.aes.get(v) {
                Some(ae) => {
                    let cache = ae.forward_cached(input.view())?;
                    let (l, g) = reconstruction_loss(cache.output().view(), targets[v].view());
                    ae_loss += l;
                    let z = cache.output().clone();
                    (Some(cache), z, Some(g))
                }
                None => (None, input.clone(), None),
            };
            let (features, tower) = self.towers[v].forward(z.view())?;
            ae_grads_out.push(recon_grad);
            caches.push(ViewCache {
                ae: ae_cache,
                ae_target: None,
                tower,
                features,
            });
        }
        let views: Vec<ArrayView2<f64>> = caches.iter().map(|c| c.features.view()).collect();
        let fused = fuse_views(&views, self.spec.fusion)?;
        let logits = self.head.forward(fused.view())?;
        let (ce, dlogits) = match labels {
            Some(l) => softmax_xent(logits.view(), l)?,
            None => (0.0, Array2::zeros(logits.dim())),
        };
        let penalty = self.head.penalty() + self.towers.iter().map(Tower::penalty).sum::<f64>();
        let loss = BatchLoss {
            ce,
            ae: ae_loss,
            penalty,
            total: ce + penalty + eta * ae_loss,
        };
        if !want_grads {
            return Ok((loss, None));
        }
        let head_grads = self.head.backward(fused.view(), logits.view(), dlogits.view())?;
        let view_grads = fuse_views_backward(&views, self.spec.fusion, head_grads.input.view())?;
        let mut tower_tensors = Vec::new();
        let mut ae_tensors = Vec::new();
        for (v, (cache, g)) in caches.iter().zip(&view_grads).enumerate() {
            let ae = self.aes.get(v).filter(|a| !a.spec.frozen);
            let tg = self.towers[v].backward(&cache.tower, g.view(), ae.is_some())?;
            tower_tensors.extend(tg.tensors);
            if let Some(ae_model) = self.aes.get(v) {
                match (ae, tg.input) {
                    (Some(ae), Some(mut dz)) => {
                        let recon = ae_grads_out[v].as_ref().expect("autoencoder gradient");
                        dz.scaled_add(eta, recon);
                        let grads = ae.backward(cache.ae.as_ref().expect("autoencoder cache"), dz.view())?;
                        ae_tensors.extend(grads.slices().into_iter().map(<[f64]>::to_vec));
                    }
                    _ => {
                        for l in &ae_model.layers {
                            ae_tensors.push(vec![0.0; l.weight.len()]);
                            ae_tensors.push(vec![0.0; l.bias.len()]);
                        }
                    }
                }
            }
            debug_assert!(cache.ae_target.is_none());
        }
        let mut tensors = tower_tensors;
        tensors.extend(ae_tensors);
        tensors.push(head_grads.weight.as_standard_layout().iter().copied().collect());
        tensors.push(head_grads.bias.to_vec());
        Ok((loss, Some(BatchGrads { tensors })))
    }

    /// Autoencoder inputs and reconstruction targets for the rows of a batch.
    ///
    /// `sources[v]` is what the robust decomposition leaves after removing
    /// the sparse error (or the raw view without one).
    pub(crate) fn batch_inputs(
        &self,
        sources: &[ArrayView2<f64>],
        clean: &[ArrayView2<f64>],
        rows: &[usize],
        corrupt: &mut dyn FnMut(usize, Array2<f64>) -> Result<Array2<f64>>,
    ) -> Result<(Vec<Array2<f64>>, Vec<Array2<f64>>)> {
        let mut inputs = Vec::with_capacity(sources.len());
        let mut targets = Vec::with_capacity(sources.len());
        for v in 0..sources.len() {
            let src = sources[v].select(Axis(0), rows);
            match self.spec.arch.ae_kind() {
                Some(AeKind::Denoising) => {
                    let target = clean[v].select(Axis(0), rows);
                    inputs.push(corrupt(v, target.clone())?);
                    targets.push(target);
                }
                _ => {
                    targets.push(src.clone());
                    inputs.push(src);
                }
            }
        }
        Ok((inputs, targets))
    }
}

impl Model {
    /// Joint loss of one batch and its gradient flattened in
    /// [`Model::flat_params`] order. `inputs[v]` enters view `v`'s
    /// autoencoder (or tower) and `targets[v]` is its reconstruction target;
    /// frozen tensors get zero gradient.
    pub fn loss_and_gradient(
        &self,
        inputs: &[Array2<f64>],
        targets: &[Array2<f64>],
        labels: Option<&LabelSet>,
    ) -> Result<(BatchLoss, Vec<f64>)> {
        self.check_batch(inputs, targets)?;
        let (loss, grads) = self.batch_loss(inputs, targets, labels, true)?;
        Ok((loss, grads.expect("gradients requested").tensors.concat()))
    }

    pub fn loss(&self, inputs: &[Array2<f64>], targets: &[Array2<f64>], labels: Option<&LabelSet>) -> Result<BatchLoss> {
        self.check_batch(inputs, targets)?;
        Ok(self.batch_loss(inputs, targets, labels, false)?.0)
    }

    fn check_batch(&self, inputs: &[Array2<f64>], targets: &[Array2<f64>]) -> Result<()> {
        let views: Vec<ArrayView2<f64>> = inputs.iter().map(|x| x.view()).collect();
        let n = self.check_inputs(&views)?;
        if targets.len() != inputs.len() || targets.iter().zip(inputs).any(|(t, x)| t.dim() != x.dim()) {
            return invalid_data("reconstruction targets must match the inputs");
        }
        if n == 0 {
            return invalid_data("empty batch");
        }
        Ok(())
    }
}

/// Central-difference check of the joint loss gradient on one batch.
pub fn gradcheck_model(
    model: &Model,
    inputs: &[Array2<f64>],
    targets: &[Array2<f64>],
    labels: Option<&LabelSet>,
    config: &GradcheckConfig,
) -> Result<GradcheckReport> {
    let (_, analytic) = model.loss_and_gradient(inputs, targets, labels)?;
    let params = model.flat_params();
    let mask: Vec<bool> = model
        .param_slices()
        .iter()
        .zip(model.trainable_mask())
        .flat_map(|(s, m)| std::iter::repeat_n(m, s.len()))
        .collect();
    let trainable: Vec<usize> = (0..params.len()).filter(|&i| mask[i]).collect();
    let sub_params: Vec<f64> = trainable.iter().map(|&i| params[i]).collect();
    let sub_grad: Vec<f64> = trainable.iter().map(|&i| analytic[i]).collect();
    let mut probe = model.clone();
    let mut full = params.clone();
    let mut failed = None;
    let report = gradcheck(
        |p| {
            for (&i, &v) in trainable.iter().zip(p) {
                full[i] = v;
            }
            probe.set_flat_params(&full).expect("same parameter count");
            match probe.loss(inputs, targets, labels) {
                Ok(l) => l.total,
                Err(e) => {
                    failed = Some(e);
                    f64::NAN
                }
            }
        },
        &sub_params,
        &sub_grad,
        config,
    );
    match failed {
        Some(e) => Err(e),
        None => Ok(report),
    }
}

/// Fraction of labeled rows whose predicted class matches.
pub fn evaluate(model: &Model, xs: &[ArrayView2<f64>], labels: &LabelSet) -> Result<f64> {
    if labels.len() != xs.first().map_or(0, |x| x.nrows()) {
        return invalid_data("label count differs from the number of rows");
    }
    if labels.num_labeled() == 0 {
        return invalid_data("no labeled rows to evaluate");
    }
    let pred = model.predict(xs)?;
    Ok(accuracy(&pred, labels))
}

pub(crate) fn accuracy(pred: &[usize], labels: &LabelSet) -> f64 {
    let mut hits = 0;
    let mut total = 0;
    for (p, l) in pred.iter().zip(labels.labels()) {
        if let Some(l) = l {
            total += 1;
            hits += usize::from(p == l);
        }
    }
    hits as f64 / total.max(1) as f64
}
