//! Dense feed-forward networks with ReLU / sigmoid activations, inverted
//! dropout, binary cross-entropy, exact backpropagation and minibatch SGD.
//!
//! Weights of a dense layer are stored row-major as `input_dim x output_dim`,
//! so a layer computes `Aᵀ·x + b`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower clamp for probabilities fed to [`binary_cross_entropy`].
pub const PROB_EPSILON: f64 = 1e-12;

/// Row-major batch of vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::Dimension {
                    context: "batch row",
                    expected: cols,
                    actual: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub input_dim: usize,
    pub output_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(input_dim: usize, output_dim: usize) -> Self {
        DenseLayer {
            input_dim,
            output_dim,
            weights: vec![0.0; input_dim * output_dim],
            bias: vec![0.0; output_dim],
        }
    }

    /// He-style uniform initialization, `U(-√(6/fan_in), √(6/fan_in))`;
    /// biases start at zero.
    pub fn he_uniform<R: Rng>(input_dim: usize, output_dim: usize, rng: &mut R) -> Self {
        let bound = (6.0 / input_dim as f64).sqrt();
        DenseLayer {
            input_dim,
            output_dim,
            weights: (0..input_dim * output_dim)
                .map(|_| rng.gen_range(-bound..bound))
                .collect(),
            bias: vec![0.0; output_dim],
        }
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.output_dim + j]
    }

    fn check(&self) -> Result<()> {
        if self.weights.len() != self.input_dim * self.output_dim {
            return Err(Error::Dimension {
                context: "dense weights",
                expected: self.input_dim * self.output_dim,
                actual: self.weights.len(),
            });
        }
        if self.bias.len() != self.output_dim {
            return Err(Error::Dimension {
                context: "dense bias",
                expected: self.output_dim,
                actual: self.bias.len(),
            });
        }
        if !self.weights.iter().chain(&self.bias).all(|v| v.is_finite()) {
            return Err(Error::invalid("dense layer has non-finite parameters"));
        }
        Ok(())
    }

    fn forward_batch(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(x.rows, self.output_dim);
        for b in 0..x.rows {
            let o = &mut out.data[b * self.output_dim..(b + 1) * self.output_dim];
            o.copy_from_slice(&self.bias);
            for (i, &xi) in x.row(b).iter().enumerate() {
                if xi == 0.0 {
                    continue;
                }
                let w = &self.weights[i * self.output_dim..(i + 1) * self.output_dim];
                for (oj, wj) in o.iter_mut().zip(w) {
                    *oj += xi * wj;
                }
            }
        }
        out
    }
}

/// Pre-activation output `Aᵀ·x + b`.
pub fn dense_forward(layer: &DenseLayer, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != layer.input_dim {
        return Err(Error::Dimension {
            context: "dense input",
            expected: layer.input_dim,
            actual: x.len(),
        });
    }
    let m = Matrix {
        rows: 1,
        cols: x.len(),
        data: x.to_vec(),
    };
    Ok(layer.forward_batch(&m).data)
}

pub fn relu(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| x.max(0.0)).collect()
}

/// Numerically stable logistic function.
pub fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| sigmoid_scalar(x)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DropoutLayer {
    pub p: f64,
}

impl DropoutLayer {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::invalid(format!("dropout probability must be in [0, 1), got {p}")));
        }
        Ok(DropoutLayer { p })
    }

    /// Mask entries are 0 (dropped) or `1/(1-p)` (kept).
    fn sample_mask<R: Rng>(&self, len: usize, rng: &mut R) -> Vec<f64> {
        let keep = 1.0 / (1.0 - self.p);
        (0..len)
            .map(|_| if rng.gen::<f64>() < self.p { 0.0 } else { keep })
            .collect()
    }
}

/// Returns the output and, in train mode, the mask that produced it.
pub fn dropout_forward<R: Rng>(
    layer: &DropoutLayer,
    v: &[f64],
    mode: Mode,
    rng: &mut R,
) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    if !(0.0..1.0).contains(&layer.p) {
        return Err(Error::invalid(format!("dropout probability must be in [0, 1), got {}", layer.p)));
    }
    match mode {
        Mode::Eval => Ok((v.to_vec(), None)),
        Mode::Train if layer.p == 0.0 => Ok((v.to_vec(), None)),
        Mode::Train => {
            let mask = layer.sample_mask(v.len(), rng);
            Ok((v.iter().zip(&mask).map(|(x, m)| x * m).collect(), Some(mask)))
        }
    }
}

/// `-y ln q - (1-y) ln(1-q)` with `q` clamped to `[ε, 1-ε]`.
pub fn binary_cross_entropy(q: f64, y: f64) -> f64 {
    let q = q.clamp(PROB_EPSILON, 1.0 - PROB_EPSILON);
    -y * q.ln() - (1.0 - y) * (1.0 - q).ln()
}

/// Binary cross-entropy of `sigmoid(z)` evaluated directly from the logit:
/// `softplus(z) - y·z`.
pub fn bce_with_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - y * z + (-z.abs()).exp().ln_1p()
}

/// Softmax cross-entropy `-x[class] + ln Σ exp(x)`.
pub fn softmax_cross_entropy(logits: &[f64], class: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
    -logits[class] + lse
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Layer {
    Dense(DenseLayer),
    Relu,
    Sigmoid,
    Dropout(DropoutLayer),
}

/// Ordered layer stack. The final layer must be a sigmoid over a single
/// unit (binary head).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub layers: Vec<Layer>,
    pub seed: u64,
}

/// Everything `backward` needs from a training-mode forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input to each layer before the sigmoid head.
    inputs: Vec<Matrix>,
    masks: Vec<Option<Vec<f64>>>,
    /// Pre-sigmoid outputs, one per batch row.
    pub logits: Vec<f64>,
}

/// Per dense layer, in stack order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn norm(&self) -> f64 {
        self.weights
            .iter()
            .chain(&self.biases)
            .flatten()
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }
}

impl Network {
    pub fn new(layers: Vec<Layer>, seed: u64) -> Result<Self> {
        let net = Network { layers, seed };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        let mut width: Option<usize> = None;
        for layer in &self.layers {
            match layer {
                Layer::Dense(d) => {
                    d.check()?;
                    if let Some(w) = width {
                        if w != d.input_dim {
                            return Err(Error::Dimension {
                                context: "layer chain",
                                expected: w,
                                actual: d.input_dim,
                            });
                        }
                    }
                    width = Some(d.output_dim);
                }
                Layer::Dropout(d) => {
                    DropoutLayer::new(d.p)?;
                }
                Layer::Relu | Layer::Sigmoid => {}
            }
        }
        match (self.layers.last(), width) {
            (Some(Layer::Sigmoid), Some(1)) => Ok(()),
            _ => Err(Error::invalid("network must end in a single-unit sigmoid head")),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.dense_layers().next().map_or(0, |d| d.input_dim)
    }

    pub fn dense_layers(&self) -> impl Iterator<Item = &DenseLayer> {
        self.layers.iter().filter_map(|l| match l {
            Layer::Dense(d) => Some(d),
            _ => None,
        })
    }

    pub fn dense_layers_mut(&mut self) -> impl Iterator<Item = &mut DenseLayer> {
        self.layers.iter_mut().filter_map(|l| match l {
            Layer::Dense(d) => Some(d),
            _ => None,
        })
    }

    pub fn parameter_count(&self) -> usize {
        self.dense_layers().map(|d| d.weights.len() + d.bias.len()).sum()
    }

    fn body(&self) -> &[Layer] {
        &self.layers[..self.layers.len() - 1]
    }

    /// Training-mode forward pass up to the logits. Dropout masks are drawn
    /// from `rng` when given; `None` disables dropout.
    pub fn forward_train<R: Rng>(&self, batch: &Matrix, mut rng: Option<&mut R>) -> Result<ForwardCache> {
        if batch.cols != self.input_dim() {
            return Err(Error::Dimension {
                context: "network input",
                expected: self.input_dim(),
                actual: batch.cols,
            });
        }
        let body = self.body();
        let mut inputs = Vec::with_capacity(body.len());
        let mut masks = Vec::with_capacity(body.len());
        let mut x = batch.clone();
        for layer in body {
            let (next, mask) = match layer {
                Layer::Dense(d) => (d.forward_batch(&x), None),
                Layer::Relu => {
                    let mut y = x.clone();
                    y.data.iter_mut().for_each(|v| *v = v.max(0.0));
                    (y, None)
                }
                Layer::Sigmoid => {
                    let mut y = x.clone();
                    y.data.iter_mut().for_each(|v| *v = sigmoid_scalar(*v));
                    (y, None)
                }
                Layer::Dropout(d) => match rng.as_deref_mut() {
                    Some(r) if d.p > 0.0 => {
                        let mask = d.sample_mask(x.data.len(), r);
                        let mut y = x.clone();
                        y.data.iter_mut().zip(&mask).for_each(|(v, m)| *v *= m);
                        (y, Some(mask))
                    }
                    _ => (x.clone(), None),
                },
            };
            inputs.push(x);
            masks.push(mask);
            x = next;
        }
        Ok(ForwardCache {
            inputs,
            masks,
            logits: x.data,
        })
    }

    /// Eval-mode logits for a batch.
    pub fn logits(&self, batch: &Matrix) -> Result<Vec<f64>> {
        Ok(self.forward_train::<rand_chacha::ChaCha8Rng>(batch, None)?.logits)
    }

    /// Eval-mode probability for one input vector.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let m = Matrix {
            rows: 1,
            cols: x.len(),
            data: x.to_vec(),
        };
        Ok(sigmoid_scalar(self.logits(&m)?[0]))
    }

    pub fn predict_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        if rows.is_empty() {
            return Ok(Vec::new());
        }
        Ok(self.logits(&Matrix::from_rows(rows)?)?.into_iter().map(sigmoid_scalar).collect())
    }

    fn l2_penalty(&self, l2_lambda: f64) -> f64 {
        0.5 * l2_lambda
            * self
                .dense_layers()
                .flat_map(|d| &d.weights)
                .map(|w| w * w)
                .sum::<f64>()
    }

    /// Mean batch cross-entropy of the cached logits plus `(λ/2)·Σ‖A‖²`.
    pub fn loss(&self, cache: &ForwardCache, targets: &[f64], l2_lambda: f64) -> Result<f64> {
        if targets.len() != cache.logits.len() {
            return Err(Error::Dimension {
                context: "targets",
                expected: cache.logits.len(),
                actual: targets.len(),
            });
        }
        let data = cache
            .logits
            .iter()
            .zip(targets)
            .map(|(z, y)| bce_with_logit(*z, *y))
            .sum::<f64>()
            / targets.len() as f64;
        Ok(data + self.l2_penalty(l2_lambda))
    }

    /// Exact gradients of [`Network::loss`] with respect to every dense
    /// weight and bias. Biases carry no L2 term.
    pub fn backward(&self, cache: &ForwardCache, targets: &[f64], l2_lambda: f64) -> Result<Gradients> {
        let body = self.body();
        if cache.inputs.len() != body.len() || cache.masks.len() != body.len() {
            return Err(Error::invalid(
                "forward cache does not belong to this network; run forward_train first",
            ));
        }
        let batch = cache.logits.len();
        if targets.len() != batch {
            return Err(Error::Dimension {
                context: "targets",
                expected: batch,
                actual: targets.len(),
            });
        }
        if batch == 0 {
            return Err(Error::invalid("backward on an empty batch"));
        }
        let scale = 1.0 / batch as f64;
        let mut delta = Matrix {
            rows: batch,
            cols: 1,
            data: cache
                .logits
                .iter()
                .zip(targets)
                .map(|(z, y)| (sigmoid_scalar(*z) - y) * scale)
                .collect(),
        };

        let mut w_grads = Vec::new();
        let mut b_grads = Vec::new();
        for (idx, layer) in body.iter().enumerate().rev() {
            let input = &cache.inputs[idx];
            match layer {
                Layer::Dense(d) => {
                    if input.cols != d.input_dim || delta.cols != d.output_dim {
                        return Err(Error::invalid("forward cache shape does not match the network"));
                    }
                    let mut gw: Vec<f64> = d.weights.iter().map(|w| l2_lambda * w).collect();
                    let mut gb = vec![0.0; d.output_dim];
                    let mut prev = Matrix::zeros(batch, d.input_dim);
                    for b in 0..batch {
                        let drow = &delta.data[b * d.output_dim..(b + 1) * d.output_dim];
                        for (g, dv) in gb.iter_mut().zip(drow) {
                            *g += dv;
                        }
                        let xrow = input.row(b);
                        let prow = &mut prev.data[b * d.input_dim..(b + 1) * d.input_dim];
                        for i in 0..d.input_dim {
                            let wrow = &d.weights[i * d.output_dim..(i + 1) * d.output_dim];
                            let grow = &mut gw[i * d.output_dim..(i + 1) * d.output_dim];
                            let xi = xrow[i];
                            let mut acc = 0.0;
                            for j in 0..d.output_dim {
                                grow[j] += xi * drow[j];
                                acc += drow[j] * wrow[j];
                            }
                            prow[i] = acc;
                        }
                    }
                    w_grads.push(gw);
                    b_grads.push(gb);
                    delta = prev;
                }
                Layer::Relu => {
                    for (dv, x) in delta.data.iter_mut().zip(&input.data) {
                        if *x <= 0.0 {
                            *dv = 0.0;
                        }
                    }
                }
                Layer::Sigmoid => {
                    for (dv, x) in delta.data.iter_mut().zip(&input.data) {
                        let s = sigmoid_scalar(*x);
                        *dv *= s * (1.0 - s);
                    }
                }
                Layer::Dropout(_) => {
                    if let Some(mask) = &cache.masks[idx] {
                        for (dv, m) in delta.data.iter_mut().zip(mask) {
                            *dv *= m;
                        }
                    }
                }
            }
        }
        w_grads.reverse();
        b_grads.reverse();
        Ok(Gradients {
            weights: w_grads,
            biases: b_grads,
        })
    }

    /// `θ ← θ − α·g` for every dense parameter.
    pub fn sgd_step(&mut self, grads: &Gradients, learning_rate: f64) -> Result<()> {
        let n_dense = self.dense_layers().count();
        if grads.weights.len() != n_dense || grads.biases.len() != n_dense {
            return Err(Error::Dimension {
                context: "gradient layer count",
                expected: n_dense,
                actual: grads.weights.len(),
            });
        }
        for (d, (gw, gb)) in self.dense_layers().zip(grads.weights.iter().zip(&grads.biases)) {
            if gw.len() != d.weights.len() || gb.len() != d.bias.len() {
                return Err(Error::Dimension {
                    context: "gradient shape",
                    expected: d.weights.len(),
                    actual: gw.len(),
                });
            }
        }
        for (d, (gw, gb)) in self.dense_layers_mut().zip(grads.weights.iter().zip(&grads.biases)) {
            for (w, g) in d.weights.iter_mut().zip(gw) {
                *w -= learning_rate * g;
            }
            for (b, g) in d.bias.iter_mut().zip(gb) {
                *b -= learning_rate * g;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDecay {
    pub every_epochs: usize,
    pub factor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub l2_lambda: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Stop after this many epochs without a validation-loss improvement.
    pub patience: Option<usize>,
    pub step_decay: Option<StepDecay>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            batch_size: 64,
            l2_lambda: 1e-4,
            epochs: 100,
            seed: 0,
            patience: Some(10),
            step_decay: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            problems.push(format!("learning_rate must be a non-negative number, got {}", self.learning_rate));
        }
        if self.batch_size == 0 {
            problems.push("batch_size must be at least 1".to_string());
        }
        if !(self.l2_lambda >= 0.0 && self.l2_lambda.is_finite()) {
            problems.push(format!("l2_lambda must be non-negative, got {}", self.l2_lambda));
        }
        if self.epochs == 0 {
            problems.push("epochs must be at least 1".to_string());
        }
        if let Some(d) = self.step_decay {
            if d.every_epochs == 0 || !(d.factor > 0.0 && d.factor <= 1.0) {
                problems.push("step_decay needs every_epochs >= 1 and factor in (0, 1]".to_string());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(problems))
        }
    }

    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        match self.step_decay {
            Some(d) => self.learning_rate * d.factor.powi((epoch / d.every_epochs) as i32),
            None => self.learning_rate,
        }
    }
}
