//! Three-layer graph convolutional classifier trained from scratch:
//! symmetric-normalized propagation, ReLU, mean readout, linear softmax
//! head, reverse-mode gradients, and Adam with bias correction.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::seed::{self, Role};

const NUM_GCN_LAYERS: usize = 3;

/// Weight matrix (in x out) plus bias, used for both GCN layers and the head.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl DenseLayer {
    fn glorot(rows: usize, cols: usize, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / (rows + cols) as f64).sqrt();
        let weight = Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-limit..limit));
        Self {
            weight,
            bias: Array1::zeros(cols),
        }
    }

    fn zeros_like(other: &Self) -> Self {
        Self {
            weight: Array2::zeros(other.weight.dim()),
            bias: Array1::zeros(other.bias.len()),
        }
    }

    fn is_finite(&self) -> bool {
        self.weight.iter().all(|x| x.is_finite()) && self.bias.iter().all(|x| x.is_finite())
    }
}

/// Three GCN layers plus a linear softmax head over the mean readout.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnModel {
    layers: Vec<DenseLayer>,
    head: DenseLayer,
}

impl GcnModel {
    /// Glorot-uniform weights, zero biases, deterministic in `seed`.
    pub fn init(input_dim: usize, hidden_dim: usize, num_classes: usize, seed: u64) -> Self {
        assert!(input_dim >= 1 && hidden_dim >= 1 && num_classes >= 1);
        let mut rng = seed::rng(seed, Role::ModelInit, &[]);
        let mut layers = Vec::with_capacity(NUM_GCN_LAYERS);
        let mut fan_in = input_dim;
        for _ in 0..NUM_GCN_LAYERS {
            layers.push(DenseLayer::glorot(fan_in, hidden_dim, &mut rng));
            fan_in = hidden_dim;
        }
        let head = DenseLayer::glorot(hidden_dim, num_classes, &mut rng);
        Self { layers, head }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weight.nrows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.layers[0].weight.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.head.bias.len()
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn head(&self) -> &DenseLayer {
        &self.head
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn head_mut(&mut self) -> &mut DenseLayer {
        &mut self.head
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(DenseLayer::is_finite) && self.head.is_finite()
    }

    pub fn to_json_string(&self) -> Result<String> {
        let file = ModelFile {
            input_dim: self.input_dim(),
            hidden_dim: self.hidden_dim(),
            num_classes: self.num_classes(),
            layers: self.layers.iter().map(LayerFile::from_layer).collect(),
            head: LayerFile::from_layer(&self.head),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.layers.len() != NUM_GCN_LAYERS {
            return Err(Error::MalformedModel(format!(
                "expected {NUM_GCN_LAYERS} layers, found {}",
                file.layers.len()
            )));
        }
        let mut layers = Vec::with_capacity(NUM_GCN_LAYERS);
        let mut fan_in = file.input_dim;
        for layer in &file.layers {
            layers.push(layer.to_layer(fan_in, file.hidden_dim)?);
            fan_in = file.hidden_dim;
        }
        let head = file.head.to_layer(file.hidden_dim, file.num_classes)?;
        Ok(Self { layers, head })
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json_string()?)?;
        Ok(())
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&fs::read_to_string(path)?)
    }
}

/// Checkpoint document: architecture dims plus flat row-major parameter
/// arrays per layer. JSON floats round-trip bit-exactly.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    input_dim: usize,
    hidden_dim: usize,
    num_classes: usize,
    layers: Vec<LayerFile>,
    head: LayerFile,
}

#[derive(Serialize, Deserialize)]
struct LayerFile {
    weight: Vec<f64>,
    bias: Vec<f64>,
}

impl LayerFile {
    fn from_layer(layer: &DenseLayer) -> Self {
        Self {
            weight: layer.weight.iter().copied().collect(),
            bias: layer.bias.to_vec(),
        }
    }

    fn to_layer(&self, rows: usize, cols: usize) -> Result<DenseLayer> {
        if self.weight.len() != rows * cols || self.bias.len() != cols {
            return Err(Error::MalformedModel(format!(
                "parameter block does not match dims {rows}x{cols}"
            )));
        }
        let weight = Array2::from_shape_vec((rows, cols), self.weight.clone())
            .expect("length checked against shape");
        Ok(DenseLayer {
            weight,
            bias: Array1::from_vec(self.bias.clone()),
        })
    }
}

/// Per-class probability vector: entries nonnegative, sum 1 within 1e-6.
#[derive(Debug, Clone, PartialEq)]
pub struct Probabilities(Vec<f64>);

impl Probabilities {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let sum: f64 = values.iter().sum();
        if values.iter().any(|&p| p.is_nan() || p < 0.0) || (sum - 1.0).abs() > 1e-6 {
            return Err(Error::MalformedModel(format!(
                "not a probability vector (sum {sum})"
            )));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, class: usize) -> f64 {
        self.0[class]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Ties break toward the lower class index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate().skip(1) {
            if p > self.0[best] {
                best = i;
            }
        }
        best
    }
}

/// Training hyperparameters. Defaults: lr 0.05, batch 64, 100 epochs,
/// Adam betas (0.9, 0.999), eps 1e-8.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub adam_betas: (f64, f64),
    pub adam_eps: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            batch_size: 64,
            epochs: 100,
            adam_betas: (0.9, 0.999),
            adam_eps: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        let lr_invalid = self.learning_rate.is_nan() || self.learning_rate < 0.0;
        if lr_invalid || self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::InvalidTrainConfig(format!(
                "lr {}, batch {}, epochs {}",
                self.learning_rate, self.batch_size, self.epochs
            )));
        }
        Ok(())
    }
}

/// Symmetric normalization with self-loops: D^{-1/2} (A + I) D^{-1/2} where
/// D is the degree matrix of A + I. An isolated node's row is the unit
/// self-loop entry; the empty graph yields a 0x0 matrix.
pub fn normalize_adjacency(g: &Graph) -> Array2<f64> {
    let n = g.num_nodes();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|v| 1.0 / ((g.degree(v) + 1) as f64).sqrt())
        .collect();
    let mut a_hat = Array2::zeros((n, n));
    for v in 0..n {
        a_hat[(v, v)] = inv_sqrt[v] * inv_sqrt[v];
    }
    for &(u, v) in g.edges() {
        let w = inv_sqrt[u] * inv_sqrt[v];
        a_hat[(u, v)] = w;
        a_hat[(v, u)] = w;
    }
    a_hat
}

/// Intermediate activations kept by [`forward`] for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// H^0 .. H^3 (input plus each layer output).
    hidden: Vec<Array2<f64>>,
    /// A_hat . H^k for each layer input, reused by the weight gradients.
    propagated: Vec<Array2<f64>>,
    /// Pre-activations Z^k, needed for the ReLU derivative.
    pre_activations: Vec<Array2<f64>>,
    readout: Array1<f64>,
    logits: Array1<f64>,
    probs: Array1<f64>,
}

impl ForwardTrace {
    pub fn hidden(&self, layer: usize) -> &Array2<f64> {
        &self.hidden[layer]
    }

    pub fn pre_activation(&self, layer: usize) -> &Array2<f64> {
        &self.pre_activations[layer]
    }

    pub fn readout(&self) -> &Array1<f64> {
        &self.readout
    }

    pub fn logits(&self) -> &Array1<f64> {
        &self.logits
    }
}

fn softmax(logits: &Array1<f64>) -> Array1<f64> {
    let max = logits.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let exps = logits.mapv(|x| (x - max).exp());
    let sum = exps.sum();
    exps / sum
}

fn log_sum_exp(logits: &Array1<f64>) -> f64 {
    let max = logits.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    max + logits.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

fn forward_trace(model: &GcnModel, g: &Graph, a_hat: &Array2<f64>) -> Result<ForwardTrace> {
    if g.feature_dim() != model.input_dim() {
        return Err(Error::InputDimMismatch {
            got: g.feature_dim(),
            expected: model.input_dim(),
        });
    }
    let n = g.num_nodes();
    let mut hidden = Vec::with_capacity(NUM_GCN_LAYERS + 1);
    let mut propagated = Vec::with_capacity(NUM_GCN_LAYERS);
    let mut pre_activations = Vec::with_capacity(NUM_GCN_LAYERS);
    hidden.push(g.features().clone());
    for layer in &model.layers {
        let prop = a_hat.dot(hidden.last().expect("nonempty"));
        let z = prop.dot(&layer.weight) + &layer.bias;
        hidden.push(z.mapv(|x| x.max(0.0)));
        propagated.push(prop);
        pre_activations.push(z);
    }
    // Mean over an empty node set is the zero vector, so an empty graph's
    // prediction is softmax of the head bias.
    let readout = if n == 0 {
        Array1::zeros(model.hidden_dim())
    } else {
        hidden
            .last()
            .expect("nonempty")
            .mean_axis(Axis(0))
            .expect("n > 0")
    };
    let logits = readout.dot(&model.head.weight) + &model.head.bias;
    let probs = softmax(&logits);
    Ok(ForwardTrace {
        hidden,
        propagated,
        pre_activations,
        readout,
        logits,
        probs,
    })
}

/// Full forward pass: three propagate-transform-ReLU layers, mean readout,
/// softmax head. Returns the class distribution and the retained activations.
pub fn forward(model: &GcnModel, g: &Graph) -> Result<(Probabilities, ForwardTrace)> {
    let trace = forward_trace(model, g, &normalize_adjacency(g))?;
    let probs = Probabilities::new(trace.probs.to_vec()).expect("softmax is a distribution");
    Ok((probs, trace))
}

/// Predicted class (argmax, ties toward the lower index) and distribution.
pub fn predict(model: &GcnModel, g: &Graph) -> Result<(usize, Probabilities)> {
    let (probs, _) = forward(model, g)?;
    Ok((probs.argmax(), probs))
}

/// Parameter-shaped gradient container.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<DenseLayer>,
    pub head: DenseLayer,
}

impl Gradients {
    fn zeros_like(model: &GcnModel) -> Self {
        Self {
            layers: model.layers.iter().map(DenseLayer::zeros_like).collect(),
            head: DenseLayer::zeros_like(&model.head),
        }
    }

    fn scale(&mut self, factor: f64) {
        for layer in self.layers.iter_mut().chain(std::iter::once(&mut self.head)) {
            layer.weight.mapv_inplace(|x| x * factor);
            layer.bias.mapv_inplace(|x| x * factor);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.layers
            .iter()
            .chain(std::iter::once(&self.head))
            .flat_map(|l| l.weight.iter().chain(l.bias.iter()))
            .fold(0.0, |acc: f64, &x| acc.max(x.abs()))
    }
}

fn outer(a: &Array1<f64>, b: &Array1<f64>) -> Array2<f64> {
    let mut out = Array2::zeros((a.len(), b.len()));
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[(i, j)] = ai * bj;
        }
    }
    out
}

/// Accumulate the cross-entropy gradient of one traced graph into `grads`.
fn accumulate_graph_grad(
    model: &GcnModel,
    a_hat: &Array2<f64>,
    trace: &ForwardTrace,
    label: usize,
    grads: &mut Gradients,
) {
    let n = trace.hidden[0].nrows();
    // d(loss)/d(logits) for softmax cross-entropy.
    let mut dlogits = trace.probs.clone();
    dlogits[label] -= 1.0;

    grads.head.weight += &outer(&trace.readout, &dlogits);
    grads.head.bias += &dlogits;

    if n == 0 {
        return;
    }
    let dreadout = model.head.weight.dot(&dlogits);
    // Mean readout spreads the gradient uniformly over rows.
    let mut dh = Array2::from_shape_fn((n, model.hidden_dim()), |(_, j)| {
        dreadout[j] / n as f64
    });
    for k in (0..NUM_GCN_LAYERS).rev() {
        let relu_gate = trace.pre_activations[k].mapv(|z| if z > 0.0 { 1.0 } else { 0.0 });
        let dz = dh * relu_gate;
        grads.layers[k].weight += &trace.propagated[k].t().dot(&dz);
        grads.layers[k].bias += &dz.sum_axis(Axis(0));
        // A_hat is symmetric, so the transpose propagation reuses it.
        dh = a_hat.dot(&dz.dot(&model.layers[k].weight.t()));
    }
}

fn batch_loss_grad(
    model: &GcnModel,
    batch: &[(&Graph, &Array2<f64>)],
) -> Result<(f64, Gradients)> {
    if batch.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let mut grads = Gradients::zeros_like(model);
    let mut loss = 0.0;
    for &(g, a_hat) in batch {
        let label = g.label().ok_or(Error::MissingLabel(0))?;
        let trace = forward_trace(model, g, a_hat)?;
        loss += log_sum_exp(&trace.logits) - trace.logits[label];
        accumulate_graph_grad(model, a_hat, &trace, label, &mut grads);
    }
    let scale = 1.0 / batch.len() as f64;
    grads.scale(scale);
    Ok((loss * scale, grads))
}

/// Mean cross-entropy over the batch and its gradient for every parameter.
pub fn loss_and_grad(model: &GcnModel, batch: &[&Graph]) -> Result<(f64, Gradients)> {
    let a_hats: Vec<Array2<f64>> = batch.iter().map(|g| normalize_adjacency(g)).collect();
    let pairs: Vec<(&Graph, &Array2<f64>)> =
        batch.iter().copied().zip(a_hats.iter()).collect();
    batch_loss_grad(model, &pairs)
}

struct Adam {
    m: Gradients,
    v: Gradients,
    step: usize,
}

impl Adam {
    fn new(model: &GcnModel) -> Self {
        Self {
            m: Gradients::zeros_like(model),
            v: Gradients::zeros_like(model),
            step: 0,
        }
    }

    fn step(&mut self, model: &mut GcnModel, grads: &Gradients, cfg: &TrainConfig) {
        self.step += 1;
        let (b1, b2) = cfg.adam_betas;
        let m_corr = 1.0 - b1.powi(self.step as i32);
        let v_corr = 1.0 - b2.powi(self.step as i32);
        let update = |param: &mut f64, grad: f64, m: &mut f64, v: &mut f64| {
            *m = b1 * *m + (1.0 - b1) * grad;
            *v = b2 * *v + (1.0 - b2) * grad * grad;
            let m_hat = *m / m_corr;
            let v_hat = *v / v_corr;
            *param -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_eps);
        };
        for k in 0..=NUM_GCN_LAYERS {
            let (param, grad, m, v) = if k < NUM_GCN_LAYERS {
                (
                    &mut model.layers[k],
                    &grads.layers[k],
                    &mut self.m.layers[k],
                    &mut self.v.layers[k],
                )
            } else {
                (&mut model.head, &grads.head, &mut self.m.head, &mut self.v.head)
            };
            for ((p, &g), (m, v)) in param
                .weight
                .iter_mut()
                .zip(grad.weight.iter())
                .zip(m.weight.iter_mut().zip(v.weight.iter_mut()))
            {
                update(p, g, m, v);
            }
            for ((p, &g), (m, v)) in param
                .bias
                .iter_mut()
                .zip(grad.bias.iter())
                .zip(m.bias.iter_mut().zip(v.bias.iter_mut()))
            {
                update(p, g, m, v);
            }
        }
    }
}

/// Adam training over shuffled minibatches. Deterministic given the config
/// seed; returns the trained model and the per-epoch mean batch loss.
/// A non-finite loss aborts with a diagnostic error.
pub fn train(
    model: GcnModel,
    graphs: &[Graph],
    cfg: &TrainConfig,
) -> Result<(GcnModel, Vec<f64>)> {
    cfg.validate()?;
    if graphs.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    for (i, g) in graphs.iter().enumerate() {
        if g.label().is_none() {
            return Err(Error::MissingLabel(i));
        }
    }
    let a_hats: Vec<Array2<f64>> = graphs.iter().map(normalize_adjacency).collect();
    let mut rng = seed::rng(cfg.seed, Role::Shuffle, &[]);
    let mut order: Vec<usize> = (0..graphs.len()).collect();
    let mut model = model;
    let mut adam = Adam::new(&model);
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for (batch_idx, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let pairs: Vec<(&Graph, &Array2<f64>)> =
                chunk.iter().map(|&i| (&graphs[i], &a_hats[i])).collect();
            let (loss, grads) = batch_loss_grad(&model, &pairs)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: batch_idx,
                    loss,
                });
            }
            adam.step(&mut model, &grads, cfg);
            if !model.is_finite() {
                return Err(Error::NonFiniteParams {
                    epoch,
                    batch: batch_idx,
                });
            }
            epoch_loss += loss;
            batches += 1;
        }
        history.push(epoch_loss / batches as f64);
    }
    Ok((model, history))
}
