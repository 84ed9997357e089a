//! Small tanh MLP with a hand-written backward pass, used by the
//! classifier and GAN baselines. Two hidden layers, linear output;
//! parameters live in one flat vector so the finite-difference checker and
//! Adam can treat every net the same way.

use crate::error::{AuditError, Result};
use crate::numcore::{adam_step, sigmoid, softplus, AdamState, RealMatrix, SeededRng};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MlpShape {
    pub in_dim: usize,
    pub hidden: usize,
    pub out_dim: usize,
}

impl MlpShape {
    pub fn n_params(&self) -> usize {
        let (i, h, o) = (self.in_dim, self.hidden, self.out_dim);
        h * i + h + h * h + h + o * h + o
    }

    fn validate(&self) -> Result<()> {
        if self.in_dim == 0 || self.hidden == 0 || self.out_dim == 0 {
            return Err(AuditError::Parameter(format!(
                "MLP shape {}x{}x{} has an empty layer",
                self.in_dim, self.hidden, self.out_dim
            )));
        }
        Ok(())
    }

    // Offsets into the flat parameter vector.
    fn w1(&self) -> usize {
        0
    }
    fn b1(&self) -> usize {
        self.hidden * self.in_dim
    }
    fn w2(&self) -> usize {
        self.b1() + self.hidden
    }
    fn b2(&self) -> usize {
        self.w2() + self.hidden * self.hidden
    }
    fn w3(&self) -> usize {
        self.b2() + self.hidden
    }
    fn b3(&self) -> usize {
        self.w3() + self.out_dim * self.hidden
    }
}

/// Hidden activations kept for the backward pass.
pub struct MlpCache {
    h1: Vec<f64>,
    h2: Vec<f64>,
}

/// Forward pass: out = W3 tanh(W2 tanh(W1 x + b1) + b2) + b3.
pub fn mlp_forward(shape: &MlpShape, params: &[f64], x: &[f64]) -> (Vec<f64>, MlpCache) {
    let (i_dim, h, o) = (shape.in_dim, shape.hidden, shape.out_dim);
    debug_assert_eq!(params.len(), shape.n_params());
    debug_assert_eq!(x.len(), i_dim);
    let mut h1 = vec![0.0; h];
    for u in 0..h {
        let mut acc = params[shape.b1() + u];
        let row = shape.w1() + u * i_dim;
        for j in 0..i_dim {
            acc += params[row + j] * x[j];
        }
        h1[u] = acc.tanh();
    }
    let mut h2 = vec![0.0; h];
    for v in 0..h {
        let mut acc = params[shape.b2() + v];
        let row = shape.w2() + v * h;
        for u in 0..h {
            acc += params[row + u] * h1[u];
        }
        h2[v] = acc.tanh();
    }
    let mut out = vec![0.0; o];
    for (k, slot) in out.iter_mut().enumerate() {
        let mut acc = params[shape.b3() + k];
        let row = shape.w3() + k * h;
        for v in 0..h {
            acc += params[row + v] * h2[v];
        }
        *slot = acc;
    }
    (out, MlpCache { h1, h2 })
}

/// Backward pass for one sample: accumulates parameter gradients and
/// returns the gradient with respect to the input.
pub fn mlp_backward(
    shape: &MlpShape,
    params: &[f64],
    cache: &MlpCache,
    x: &[f64],
    g_out: &[f64],
    grads: &mut [f64],
) -> Vec<f64> {
    let (i_dim, h, o) = (shape.in_dim, shape.hidden, shape.out_dim);
    debug_assert_eq!(g_out.len(), o);
    let mut g_h2 = vec![0.0; h];
    for k in 0..o {
        let g = g_out[k];
        grads[shape.b3() + k] += g;
        let row = shape.w3() + k * h;
        for v in 0..h {
            grads[row + v] += g * cache.h2[v];
            g_h2[v] += g * params[row + v];
        }
    }
    let mut g_h1 = vec![0.0; h];
    for v in 0..h {
        let g = g_h2[v] * (1.0 - cache.h2[v] * cache.h2[v]);
        grads[shape.b2() + v] += g;
        let row = shape.w2() + v * h;
        for u in 0..h {
            grads[row + u] += g * cache.h1[u];
            g_h1[u] += g * params[row + u];
        }
    }
    let mut g_x = vec![0.0; i_dim];
    for u in 0..h {
        let g = g_h1[u] * (1.0 - cache.h1[u] * cache.h1[u]);
        grads[shape.b1() + u] += g;
        let row = shape.w1() + u * i_dim;
        for j in 0..i_dim {
            grads[row + j] += g * x[j];
            g_x[j] += g * params[row + j];
        }
    }
    g_x
}

/// A net plus its parameters. Weights start at N(0, 1/sqrt(fan_in)),
/// biases at zero.
#[derive(Debug, Clone)]
pub struct MlpNet {
    pub shape: MlpShape,
    pub params: Vec<f64>,
}

impl MlpNet {
    pub fn init(shape: MlpShape, rng: &mut SeededRng) -> Result<MlpNet> {
        shape.validate()?;
        let mut params = vec![0.0; shape.n_params()];
        let scale1 = 1.0 / (shape.in_dim as f64).sqrt();
        for p in &mut params[shape.w1()..shape.b1()] {
            *p = scale1 * rng.normal();
        }
        let scale2 = 1.0 / (shape.hidden as f64).sqrt();
        for p in &mut params[shape.w2()..shape.b2()] {
            *p = scale2 * rng.normal();
        }
        for p in &mut params[shape.w3()..shape.b3()] {
            *p = scale2 * rng.normal();
        }
        Ok(MlpNet { shape, params })
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        mlp_forward(&self.shape, &self.params, x).0
    }

    /// Scalar logit of a single-output net.
    pub fn logit(&self, x: &[f64]) -> f64 {
        self.forward(x)[0]
    }
}

/// Optimization settings shared by the classifier and GAN baselines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 200, batch: 50, lr: 1e-3 }
    }
}

impl TrainConfig {
    /// Zero epochs is legal: it leaves the net at initialization, which the
    /// GAN attack uses as an untrained baseline.
    pub fn validate(&self) -> Result<()> {
        if self.batch == 0 {
            return Err(AuditError::Parameter("batch must be positive".into()));
        }
        if !self.lr.is_finite() || self.lr <= 0.0 {
            return Err(AuditError::Parameter(format!("lr must be positive, got {}", self.lr)));
        }
        Ok(())
    }
}

/// Mean binary cross-entropy with logits over (xs, labels) plus its
/// gradient. Labels are 0 or 1.
pub fn bce_loss_and_grad(
    shape: &MlpShape,
    params: &[f64],
    xs: &RealMatrix,
    labels: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let mut grads = vec![0.0; shape.n_params()];
    let loss = bce_eval(shape, params, xs, labels, Some(&mut grads))?;
    Ok((loss, grads))
}

pub fn bce_loss(shape: &MlpShape, params: &[f64], xs: &RealMatrix, labels: &[f64]) -> Result<f64> {
    bce_eval(shape, params, xs, labels, None)
}

fn bce_eval(
    shape: &MlpShape,
    params: &[f64],
    xs: &RealMatrix,
    labels: &[f64],
    mut grads: Option<&mut Vec<f64>>,
) -> Result<f64> {
    shape.validate()?;
    if shape.out_dim != 1 {
        return Err(AuditError::Parameter("BCE needs a single-logit net".into()));
    }
    if xs.n_rows() != labels.len() || xs.n_rows() == 0 {
        return Err(AuditError::Size(format!(
            "{} rows with {} labels",
            xs.n_rows(),
            labels.len()
        )));
    }
    if xs.n_cols() != shape.in_dim {
        return Err(AuditError::Dimension(format!(
            "{}-column data into a {}-input net",
            xs.n_cols(),
            shape.in_dim
        )));
    }
    let mut total = 0.0;
    for (row, &y) in xs.rows().zip(labels.iter()) {
        let (out, cache) = mlp_forward(shape, params, row);
        let logit = out[0];
        // BCE with logits: softplus(l) - y*l.
        total += softplus(logit) - y * logit;
        if let Some(g) = grads.as_deref_mut() {
            let g_logit = sigmoid(logit) - y;
            mlp_backward(shape, params, &cache, row, &[g_logit], g);
        }
    }
    let n = xs.n_rows() as f64;
    if let Some(g) = grads {
        for v in g.iter_mut() {
            *v /= n;
        }
    }
    Ok(total / n)
}

/// Train a single-logit classifier with Adam on shuffled minibatches.
pub fn train_classifier(
    xs: &RealMatrix,
    labels: &[f64],
    hidden: usize,
    cfg: &TrainConfig,
    rng: &mut SeededRng,
) -> Result<MlpNet> {
    cfg.validate()?;
    if labels.iter().any(|y| *y != 0.0 && *y != 1.0) {
        return Err(AuditError::Data("classifier labels must be 0 or 1".into()));
    }
    let pos = labels.iter().filter(|y| **y == 1.0).count();
    if pos == 0 || pos == labels.len() {
        return Err(AuditError::DegenerateLabels(format!(
            "{} positives out of {} rows",
            pos,
            labels.len()
        )));
    }
    let shape = MlpShape { in_dim: xs.n_cols(), hidden, out_dim: 1 };
    let mut net = MlpNet::init(shape, rng)?;
    let mut adam = AdamState::new(net.params.len(), cfg.lr);
    let n = xs.n_rows();
    let mut step = 0usize;
    for _ in 0..cfg.epochs {
        let order = rng.permutation(n);
        for chunk in order.chunks(cfg.batch) {
            let batch = xs.select_rows(chunk)?;
            let batch_labels: Vec<f64> = chunk.iter().map(|&i| labels[i]).collect();
            let (loss, grads) = bce_loss_and_grad(&shape, &net.params, &batch, &batch_labels)?;
            step += 1;
            if !loss.is_finite() {
                return Err(AuditError::TrainingDiverged {
                    step,
                    message: format!("classifier loss {loss}"),
                });
            }
            adam_step(&mut net.params, &grads, &mut adam)
                .map_err(|e| AuditError::TrainingDiverged { step, message: e.to_string() })?;
        }
    }
    Ok(net)
}
