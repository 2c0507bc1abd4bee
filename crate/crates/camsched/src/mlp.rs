//! Small fully connected Q-network with manual backpropagation.
//!
//! Fixed depth: three hidden ReLU layers and a linear output, one output per
//! action. Training minimizes a masked squared error: only the Q-value of the
//! action actually taken is pulled toward its target, so gradients for every
//! other output are zero. All math is in f64.

use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hidden-layer widths used when a config does not override them.
pub const DEFAULT_HIDDEN: [usize; 3] = [128, 128, 64];

const MODEL_VERSION: u32 = 1;

/// One dense layer, weights stored row-major as `rows x cols`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DenseLayer {
    pub rows: usize,
    pub cols: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl DenseLayer {
    /// Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)], zero biases.
    fn init(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / (cols as f64).sqrt();
        let w = (0..rows * cols)
            .map(|_| rng.gen_range(-bound..=bound))
            .collect();
        DenseLayer {
            rows,
            cols,
            w,
            b: vec![0.0; rows],
        }
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for r in 0..self.rows {
            let row = &self.w[r * self.cols..(r + 1) * self.cols];
            let mut acc = self.b[r];
            for (wi, xi) in row.iter().zip(x) {
                acc += wi * xi;
            }
            out.push(acc);
        }
    }

    fn param_count(&self) -> usize {
        self.w.len() + self.b.len()
    }
}

/// Gradient of the loss with respect to one layer's parameters.
#[derive(Debug, Clone)]
pub struct LayerGrad {
    pub dw: Vec<f64>,
    pub db: Vec<f64>,
}

/// Gradient for the whole network, layer by layer.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

impl Gradients {
    fn zeros_like(net: &QNetwork) -> Self {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrad {
                    dw: vec![0.0; l.w.len()],
                    db: vec![0.0; l.b.len()],
                })
                .collect(),
        }
    }

    fn add_scaled(&mut self, other: &Gradients, scale: f64) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.dw.iter_mut().zip(&b.dw) {
                *x += scale * y;
            }
            for (x, y) in a.db.iter_mut().zip(&b.db) {
                *x += scale * y;
            }
        }
    }
}

/// Adam optimizer state (first/second moments per parameter).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(net: &QNetwork, lr: f64) -> Self {
        let shapes: Vec<Vec<f64>> = net
            .layers
            .iter()
            .map(|l| vec![0.0; l.param_count()])
            .collect();
        AdamState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: shapes.clone(),
            v: shapes,
        }
    }
}

/// Q-network: three hidden ReLU layers and a linear output layer.
#[derive(Debug, Clone)]
pub struct QNetwork {
    pub input_dim: usize,
    pub output_dim: usize,
    pub layers: Vec<DenseLayer>,
}

impl QNetwork {
    pub fn new(input_dim: usize, hidden: [usize; 3], output_dim: usize, seed: u64) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 || hidden.contains(&0) {
            return Err(Error::config("network dimensions must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = [input_dim, hidden[0], hidden[1], hidden[2], output_dim];
        let layers = (0..4)
            .map(|i| DenseLayer::init(dims[i + 1], dims[i], &mut rng))
            .collect();
        Ok(QNetwork {
            input_dim,
            output_dim,
            layers,
        })
    }

    pub fn hidden_widths(&self) -> [usize; 3] {
        [
            self.layers[0].rows,
            self.layers[1].rows,
            self.layers[2].rows,
        ]
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.param_count()).sum()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::config(format!(
                "input has {} features, network expects {}",
                x.len(),
                self.input_dim
            )));
        }
        Ok(())
    }

    fn check_action(&self, action: usize) -> Result<()> {
        if action >= self.output_dim {
            return Err(Error::config(format!(
                "action index {action} outside 0..{}",
                self.output_dim
            )));
        }
        Ok(())
    }

    /// Q-values for every action.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            layer.apply(&cur, &mut next);
            if i < self.layers.len() - 1 {
                for z in next.iter_mut() {
                    if *z < 0.0 {
                        *z = 0.0;
                    }
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// Index of the highest Q-value, lowest index on ties.
    pub fn argmax(&self, x: &[f64]) -> Result<usize> {
        let q = self.forward(x)?;
        let mut best = 0;
        for (i, &v) in q.iter().enumerate() {
            if v > q[best] {
                best = i;
            }
        }
        Ok(best)
    }

    pub fn max_q(&self, x: &[f64]) -> Result<f64> {
        let q = self.forward(x)?;
        Ok(q.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
    }

    /// Squared error of the selected action's Q-value against `y`.
    pub fn loss(&self, x: &[f64], action: usize, y: f64) -> Result<f64> {
        self.check_action(action)?;
        let q = self.forward(x)?;
        let d = q[action] - y;
        Ok(d * d)
    }

    /// Loss and its analytic gradient for one sample.
    pub fn backward(&self, x: &[f64], action: usize, y: f64) -> Result<(f64, Gradients)> {
        self.check_input(x)?;
        self.check_action(action)?;
        // Forward pass keeping post-activation values per layer.
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(5);
        acts.push(x.to_vec());
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::new();
            layer.apply(acts.last().unwrap(), &mut z);
            if i < self.layers.len() - 1 {
                for v in z.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            acts.push(z);
        }
        let q = acts.last().unwrap();
        let diff = q[action] - y;
        let loss = diff * diff;

        let mut grads = Gradients::zeros_like(self);
        // Masked loss: only the taken action's output carries error.
        let mut delta = vec![0.0; self.output_dim];
        delta[action] = 2.0 * diff;
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let input = &acts[i];
            let grad = &mut grads.layers[i];
            for r in 0..layer.rows {
                let d = delta[r];
                if d != 0.0 {
                    let row = &mut grad.dw[r * layer.cols..(r + 1) * layer.cols];
                    for (g, xi) in row.iter_mut().zip(input) {
                        *g = d * xi;
                    }
                }
                grad.db[r] = d;
            }
            if i > 0 {
                let mut prev = vec![0.0; layer.cols];
                for r in 0..layer.rows {
                    let d = delta[r];
                    if d != 0.0 {
                        let row = &layer.w[r * layer.cols..(r + 1) * layer.cols];
                        for (p, wi) in prev.iter_mut().zip(row) {
                            *p += d * wi;
                        }
                    }
                }
                // Backprop through the ReLU: the stored activation is zero
                // exactly where the unit was clamped.
                for (p, a) in prev.iter_mut().zip(&acts[i]) {
                    if *a <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
        Ok((loss, grads))
    }

    /// Mean loss and mean gradient over a minibatch.
    pub fn backward_batch(&self, samples: &[(&[f64], usize, f64)]) -> Result<(f64, Gradients)> {
        if samples.is_empty() {
            return Err(Error::config("empty minibatch"));
        }
        let scale = 1.0 / samples.len() as f64;
        let mut total = Gradients::zeros_like(self);
        let mut loss_sum = 0.0;
        for (x, a, y) in samples {
            let (loss, g) = self.backward(x, *a, *y)?;
            loss_sum += loss;
            total.add_scaled(&g, scale);
        }
        Ok((loss_sum * scale, total))
    }

    /// One Adam update with bias correction.
    pub fn adam_step(&mut self, adam: &mut AdamState, grads: &Gradients) -> Result<()> {
        if grads.layers.len() != self.layers.len() {
            return Err(Error::config("gradient shape does not match network"));
        }
        for (i, (layer, grad)) in self.layers.iter().zip(&grads.layers).enumerate() {
            if grad.dw.len() != layer.w.len() || grad.db.len() != layer.b.len() {
                return Err(Error::config(format!(
                    "gradient shape mismatch in layer {i}"
                )));
            }
            if grad.dw.iter().chain(&grad.db).any(|g| !g.is_finite()) {
                return Err(Error::config(format!("non-finite gradient in layer {i}")));
            }
        }
        adam.step += 1;
        let bc1 = 1.0 - adam.beta1.powi(adam.step as i32);
        let bc2 = 1.0 - adam.beta2.powi(adam.step as i32);
        for (i, layer) in self.layers.iter_mut().enumerate() {
            let grad = &grads.layers[i];
            let m = &mut adam.m[i];
            let v = &mut adam.v[i];
            let params = layer.w.iter_mut().chain(layer.b.iter_mut());
            let gs = grad.dw.iter().chain(grad.db.iter());
            for (j, (p, &g)) in params.zip(gs).enumerate() {
                m[j] = adam.beta1 * m[j] + (1.0 - adam.beta1) * g;
                v[j] = adam.beta2 * v[j] + (1.0 - adam.beta2) * g * g;
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                *p -= adam.lr * m_hat / (v_hat.sqrt() + adam.eps);
            }
        }
        Ok(())
    }

    fn param_mut(&mut self, mut idx: usize) -> &mut f64 {
        for layer in &mut self.layers {
            if idx < layer.w.len() {
                return &mut layer.w[idx];
            }
            idx -= layer.w.len();
            if idx < layer.b.len() {
                return &mut layer.b[idx];
            }
            idx -= layer.b.len();
        }
        panic!("parameter index out of range");
    }

    fn param_grad(grads: &Gradients, mut idx: usize) -> f64 {
        for layer in &grads.layers {
            if idx < layer.dw.len() {
                return layer.dw[idx];
            }
            idx -= layer.dw.len();
            if idx < layer.db.len() {
                return layer.db[idx];
            }
            idx -= layer.db.len();
        }
        panic!("parameter index out of range");
    }

    /// Central finite-difference check of the analytic gradient on a random
    /// parameter subset. Returns the maximum relative error
    /// `|analytic - numeric| / max(|analytic|, |numeric|, 1e-8)`.
    pub fn grad_check(
        &mut self,
        x: &[f64],
        action: usize,
        y: f64,
        h: f64,
        max_params: usize,
        seed: u64,
    ) -> Result<f64> {
        let (_, analytic) = self.backward(x, action, y)?;
        let total = self.param_count();
        let indices: Vec<usize> = if total <= max_params {
            (0..total).collect()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rand::seq::index::sample(&mut rng, total, max_params).into_vec()
        };
        let mut worst: f64 = 0.0;
        for idx in indices {
            let original = *self.param_mut(idx);
            *self.param_mut(idx) = original + h;
            let up = self.loss(x, action, y)?;
            *self.param_mut(idx) = original - h;
            let down = self.loss(x, action, y)?;
            *self.param_mut(idx) = original;
            let numeric = (up - down) / (2.0 * h);
            let a = Self::param_grad(&analytic, idx);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            worst = worst.max(rel);
        }
        Ok(worst)
    }
}

/// Dimensions a saved model was trained against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSignature {
    pub num_cameras: u32,
    pub history_len: usize,
    pub feature_dim: usize,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    signature: ModelSignature,
    input_dim: usize,
    output_dim: usize,
    layers: Vec<DenseLayer>,
    adam: AdamState,
}

/// Saves network, optimizer state, and signature as one JSON container.
pub fn save_model(
    net: &QNetwork,
    adam: &AdamState,
    signature: &ModelSignature,
    path: &Path,
) -> Result<()> {
    let file = ModelFile {
        version: MODEL_VERSION,
        signature: signature.clone(),
        input_dim: net.input_dim,
        output_dim: net.output_dim,
        layers: net.layers.clone(),
        adam: adam.clone(),
    };
    let mut text = serde_json::to_string(&file).expect("model serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Loads a model container and validates version and shape consistency.
pub fn load_model(path: &Path) -> Result<(QNetwork, AdamState, ModelSignature)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ModelFile = serde_json::from_str(&text)
        .map_err(|e| Error::parse(path, e.line() as u64, e.to_string()))?;
    if file.version != MODEL_VERSION {
        return Err(Error::validation(format!(
            "model version {} not supported (expected {MODEL_VERSION})",
            file.version
        )));
    }
    if file.layers.len() != 4 {
        return Err(Error::validation("model must have exactly 4 layers"));
    }
    let mut expect_cols = file.input_dim;
    for (i, layer) in file.layers.iter().enumerate() {
        if layer.cols != expect_cols
            || layer.w.len() != layer.rows * layer.cols
            || layer.b.len() != layer.rows
        {
            return Err(Error::validation(format!(
                "inconsistent shape in layer {i}"
            )));
        }
        expect_cols = layer.rows;
    }
    if expect_cols != file.output_dim {
        return Err(Error::validation(
            "output layer width does not match output_dim",
        ));
    }
    if file.signature.feature_dim != file.input_dim {
        return Err(Error::validation(
            "signature feature_dim does not match input_dim",
        ));
    }
    let net = QNetwork {
        input_dim: file.input_dim,
        output_dim: file.output_dim,
        layers: file.layers,
    };
    Ok((net, file.adam, file.signature))
}
