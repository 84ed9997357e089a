//! Masked block-autoregressive flow with gated residual connections.
//!
//! Each flow maps u -> y = s*T(u) + (1-s)*u, where s = sigmoid(g) is a
//! scalar gate and T is a masked MLP: weight matrices are lower
//! block-triangular over features, diagonal blocks are exponentiated so
//! their entries stay positive, and tanh sits between layers. Then
//! dy_i/du_i = s*JT_i + (1-s) > 0, each flow is strictly increasing per
//! feature, and the Jacobian of the whole stack is lower triangular: the
//! log-determinant is the sum of per-feature, per-flow terms.
//!
//! The per-feature diagonal derivative JT_i is a chain of positive matrix
//! products interleaved with tanh' factors. It is accumulated in linear
//! space with per-layer renormalization (the ln of each layer's max is
//! carried separately), which reuses the exponentiated weights and keeps
//! training cheap. When tanh saturates hard enough that a whole layer's
//! chain underflows to zero, the value is recomputed in log space instead;
//! gradients for such a feature are dropped, which is exact to f64
//! precision there because they arrive scaled by s*JT_i/(s*JT_i + 1 - s).

use serde::{Deserialize, Serialize};

use super::DensityModel;
use crate::error::{AuditError, Result};
use crate::numcore::{
    adam_step, log_add_exp, log_sum_exp, sigmoid, softplus, AdamState, RealMatrix, SeededRng,
    LN_2PI,
};

/// First-layer diagonal blocks start near this scale so the untrained
/// transform stays inside tanh's linear range; deeper blocks start near
/// 1/fan-in. With gates at zero the initial map is linear per feature with
/// slope about (1 + INIT_DIAG_SCALE)/2 per flow.
pub const INIT_DIAG_SCALE: f64 = 3e-4;

const CROSS_INIT_STD: f64 = 1e-8;
const INIT_LOG_NOISE: f64 = 0.25;
const SAVE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FlowConfig {
    pub dim: usize,
    pub flows: usize,
    /// Weight layers per flow, at least 2 (input and output layers).
    pub layers: usize,
    /// Hidden units per feature.
    pub hidden: usize,
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
}

impl FlowConfig {
    /// Training defaults used throughout: 5 flows of 3 layers, 32 hidden
    /// units per feature, 50 epochs of batch-50 Adam at lr 0.01.
    pub fn for_dim(dim: usize) -> Self {
        FlowConfig { dim, flows: 5, layers: 3, hidden: 32, epochs: 50, batch: 50, lr: 0.01 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(AuditError::Parameter("flow dim must be positive".into()));
        }
        if self.flows == 0 {
            return Err(AuditError::Parameter("need at least one flow".into()));
        }
        if self.layers < 2 {
            return Err(AuditError::Parameter(format!(
                "need at least 2 layers per flow, got {}",
                self.layers
            )));
        }
        if self.hidden == 0 {
            return Err(AuditError::Parameter("hidden units must be positive".into()));
        }
        if self.batch == 0 {
            return Err(AuditError::Parameter("batch size must be positive".into()));
        }
        if !self.lr.is_finite() || self.lr <= 0.0 {
            return Err(AuditError::Parameter(format!("lr must be positive, got {}", self.lr)));
        }
        Ok(())
    }
}

/// Offsets of one layer's parameter blocks in the flat parameter vector.
/// a/b are output/input units per feature; diagonal-block weights are stored
/// as logs, cross-feature blocks and biases as plain values.
#[derive(Debug, Clone, Copy)]
struct LayerShape {
    a: usize,
    b: usize,
    diag: usize,
    cross: usize,
    bias: usize,
}

impl LayerShape {
    #[inline]
    fn diag_idx(&self, i: usize, k: usize, j: usize) -> usize {
        self.diag + (i * self.a + k) * self.b + j
    }

    #[inline]
    fn bias_idx(&self, i: usize, k: usize) -> usize {
        self.bias + i * self.a + k
    }
}

#[derive(Debug, Clone)]
struct FlowShape {
    gate: usize,
    layers: Vec<LayerShape>,
}

#[derive(Debug, Clone)]
struct Shapes {
    d: usize,
    flows: Vec<FlowShape>,
    n_params: usize,
}

/// Index of the cross block for features (i, jf), jf < i.
#[inline]
fn pair_index(i: usize, jf: usize) -> usize {
    i * (i - 1) / 2 + jf
}

impl Shapes {
    fn new(cfg: &FlowConfig) -> Shapes {
        let d = cfg.dim;
        let pairs = d * (d - 1) / 2;
        let mut off = 0usize;
        let mut flows = Vec::with_capacity(cfg.flows);
        for _ in 0..cfg.flows {
            let gate = off;
            off += 1;
            let mut layers = Vec::with_capacity(cfg.layers);
            for l in 0..cfg.layers {
                let a = if l + 1 == cfg.layers { 1 } else { cfg.hidden };
                let b = if l == 0 { 1 } else { cfg.hidden };
                let diag = off;
                off += d * a * b;
                let cross = off;
                off += pairs * a * b;
                let bias = off;
                off += d * a;
                layers.push(LayerShape { a, b, diag, cross, bias });
            }
            flows.push(FlowShape { gate, layers });
        }
        Shapes { d, flows, n_params: off }
    }
}

/// exp of every diagonal-block parameter, refreshed once per parameter
/// update and shared across the batch. Indexed [flow][layer][(i*a+k)*b+j].
fn exp_diags(shapes: &Shapes, params: &[f64]) -> Vec<Vec<Vec<f64>>> {
    shapes
        .flows
        .iter()
        .map(|fs| {
            fs.layers
                .iter()
                .map(|ls| {
                    let len = shapes.d * ls.a * ls.b;
                    (0..len).map(|t| params[ls.diag + t].exp()).collect()
                })
                .collect()
        })
        .collect()
}

/// Everything the backward pass needs from one flow's forward pass.
struct FlowTrace {
    u: Vec<f64>,
    h: Vec<Vec<f64>>,
    t_out: Vec<f64>,
    y: Vec<f64>,
    /// Normalized linear diagonal chain per level, and the normalizers.
    cv: Vec<Vec<f64>>,
    craw_mid: Vec<Vec<f64>>,
    cm: Vec<Vec<f64>>,
    s_lin: Vec<f64>,
    log_jt: Vec<f64>,
    fallback: Vec<bool>,
    s: f64,
    ln_s: f64,
    ld: Vec<f64>,
}

/// ln(1 - tanh(x)^2) = 2*(ln 2 - |x| - ln(1 + e^(-2|x|))), stable for any x.
#[inline]
fn log_tanh_deriv(x: f64) -> f64 {
    let ax = x.abs();
    2.0 * (std::f64::consts::LN_2 - ax - (-2.0 * ax).exp().ln_1p())
}

/// Per-feature log JT in log space; only used when the linear chain
/// underflows (hard tanh saturation).
fn log_chain_fallback(
    layers: &[LayerShape],
    params: &[f64],
    pre: &[Vec<f64>],
    i: usize,
) -> f64 {
    let n_layers = layers.len();
    let a0 = layers[0].a;
    let mut c: Vec<f64> = (0..a0)
        .map(|k| params[layers[0].diag_idx(i, k, 0)] + log_tanh_deriv(pre[0][i * a0 + k]))
        .collect();
    for (l, ls) in layers.iter().enumerate().take(n_layers - 1).skip(1) {
        let mut next = vec![0.0; ls.a];
        for (k, slot) in next.iter_mut().enumerate() {
            let terms: Vec<f64> =
                (0..ls.b).map(|j| params[ls.diag_idx(i, k, j)] + c[j]).collect();
            *slot = log_sum_exp(&terms) + log_tanh_deriv(pre[l][i * ls.a + k]);
        }
        c = next;
    }
    let last = &layers[n_layers - 1];
    let terms: Vec<f64> = (0..last.b).map(|j| params[last.diag_idx(i, 0, j)] + c[j]).collect();
    log_sum_exp(&terms)
}

fn flow_forward(
    d: usize,
    fs: &FlowShape,
    params: &[f64],
    exps: &[Vec<f64>],
    u: &[f64],
) -> FlowTrace {
    let layers = &fs.layers;
    let n_layers = layers.len();
    let mut pre_cache: Vec<Vec<f64>> = Vec::with_capacity(n_layers - 1);
    let mut h_cache: Vec<Vec<f64>> = Vec::with_capacity(n_layers - 1);
    let mut t_out = vec![0.0; d];
    let mut cur: Vec<f64> = u.to_vec();
    for (l, ls) in layers.iter().enumerate() {
        let (a, b) = (ls.a, ls.b);
        let mut pre = vec![0.0; d * a];
        for i in 0..d {
            for k in 0..a {
                let mut acc = params[ls.bias_idx(i, k)];
                let row = (i * a + k) * b;
                for j in 0..b {
                    acc += exps[l][row + j] * cur[i * b + j];
                }
                for jf in 0..i {
                    let prow = (pair_index(i, jf) * a + k) * b;
                    for j in 0..b {
                        acc += params[ls.cross + prow + j] * cur[jf * b + j];
                    }
                }
                pre[i * a + k] = acc;
            }
        }
        if l + 1 < n_layers {
            let h: Vec<f64> = pre.iter().map(|p| p.tanh()).collect();
            pre_cache.push(pre);
            cur = h.clone();
            h_cache.push(h);
        } else {
            t_out.copy_from_slice(&pre);
        }
    }

    // The diagonal derivative chain, feature by feature, in linear space
    // with per-layer max renormalization.
    let mut cv: Vec<Vec<f64>> = Vec::with_capacity(n_layers - 1);
    let mut craw_mid: Vec<Vec<f64>> = Vec::with_capacity(n_layers.saturating_sub(2));
    let mut cm: Vec<Vec<f64>> = Vec::with_capacity(n_layers - 1);
    let mut offsets = vec![0.0; d];
    let mut fallback = vec![false; d];

    let a0 = layers[0].a;
    let mut v0 = vec![0.0; d * a0];
    let mut m0 = vec![0.0; d];
    for i in 0..d {
        let mut m = 0.0f64;
        for k in 0..a0 {
            let idx = i * a0 + k;
            let h = h_cache[0][idx];
            let val = exps[0][idx] * (1.0 - h * h);
            v0[idx] = val;
            if val > m {
                m = val;
            }
        }
        if m <= 0.0 || !m.is_finite() {
            fallback[i] = true;
            m = 1.0;
        }
        m0[i] = m;
        offsets[i] += m.ln();
        for k in 0..a0 {
            v0[i * a0 + k] /= m;
        }
    }
    cv.push(v0);
    cm.push(m0);

    for l in 1..n_layers - 1 {
        let (a, b) = (layers[l].a, layers[l].b);
        let mut raw = vec![0.0; d * a];
        let mut v = vec![0.0; d * a];
        let mut mvec = vec![0.0; d];
        {
            let prev = &cv[l - 1];
            for i in 0..d {
                let mut m = 0.0f64;
                for k in 0..a {
                    let row = (i * a + k) * b;
                    let mut acc = 0.0;
                    for j in 0..b {
                        acc += exps[l][row + j] * prev[i * b + j];
                    }
                    raw[i * a + k] = acc;
                    let h = h_cache[l][i * a + k];
                    let w = acc * (1.0 - h * h);
                    v[i * a + k] = w;
                    if w > m {
                        m = w;
                    }
                }
                if m <= 0.0 || !m.is_finite() {
                    fallback[i] = true;
                    m = 1.0;
                }
                mvec[i] = m;
                offsets[i] += m.ln();
                for k in 0..a {
                    v[i * a + k] /= m;
                }
            }
        }
        craw_mid.push(raw);
        cv.push(v);
        cm.push(mvec);
    }

    let bl = layers[n_layers - 1].b;
    let mut s_lin = vec![0.0; d];
    let mut log_jt = vec![0.0; d];
    for i in 0..d {
        let prev = &cv[n_layers - 2];
        let row = i * bl;
        let mut acc = 0.0;
        for j in 0..bl {
            acc += exps[n_layers - 1][row + j] * prev[row + j];
        }
        s_lin[i] = acc;
        if acc <= 0.0 || !acc.is_finite() {
            fallback[i] = true;
        }
        log_jt[i] = if fallback[i] {
            log_chain_fallback(layers, params, &pre_cache, i)
        } else {
            acc.ln() + offsets[i]
        };
    }

    let gate = params[fs.gate];
    let s = sigmoid(gate);
    let ln_s = -softplus(-gate);
    let ln_1ms = -softplus(gate);
    let mut y = vec![0.0; d];
    let mut ld = vec![0.0; d];
    for i in 0..d {
        y[i] = s * t_out[i] + (1.0 - s) * u[i];
        ld[i] = log_add_exp(ln_s + log_jt[i], ln_1ms);
    }

    FlowTrace {
        u: u.to_vec(),
        h: h_cache,
        t_out,
        y,
        cv,
        craw_mid,
        cm,
        s_lin,
        log_jt,
        fallback,
        s,
        ln_s,
        ld,
    }
}

/// Backward through one flow. `g_y` is dloss/dy; the log-det terms carry a
/// fixed dloss/d(ld_i) = -1. Accumulates parameter gradients and returns
/// dloss/du for the upstream flow.
fn flow_backward(
    d: usize,
    fs: &FlowShape,
    params: &[f64],
    exps: &[Vec<f64>],
    tr: &FlowTrace,
    g_y: &[f64],
    grads: &mut [f64],
) -> Vec<f64> {
    let layers = &fs.layers;
    let n_layers = layers.len();
    let s = tr.s;

    let mut g_u = vec![0.0; d];
    let mut g_t_out = vec![0.0; d];
    let mut g_logjt = vec![0.0; d];
    let mut g_gate = 0.0;
    for i in 0..d {
        // Blend weight of the transform branch inside the log-det:
        // w = s*JT/(s*JT + 1 - s), and d(ld)/d(gate) = w - s.
        let w = (tr.ln_s + tr.log_jt[i] - tr.ld[i]).exp();
        g_gate += g_y[i] * (tr.t_out[i] - tr.u[i]) * s * (1.0 - s) - (w - s);
        g_t_out[i] = g_y[i] * s;
        g_u[i] = g_y[i] * (1.0 - s);
        g_logjt[i] = -w;
    }
    grads[fs.gate] += g_gate;

    // Log-det chain backward. Gradients into each tanh layer's derivative
    // factor t = 1 - h^2 are collected here and folded into the value pass.
    let mut g_t: Vec<Vec<f64>> =
        (0..n_layers - 1).map(|l| vec![0.0; d * layers[l].a]).collect();
    for i in 0..d {
        if tr.fallback[i] {
            // Saturated feature: these gradients arrive multiplied by
            // w = s*JT/(s*JT+1-s) which has underflowed to zero.
            continue;
        }
        let last = &layers[n_layers - 1];
        let bl = last.b;
        let gs = g_logjt[i] / tr.s_lin[i];
        let prev = &tr.cv[n_layers - 2];
        let mut g_cv = vec![0.0; bl];
        for j in 0..bl {
            let e = exps[n_layers - 1][i * bl + j];
            grads[last.diag_idx(i, 0, j)] += gs * e * prev[i * bl + j];
            g_cv[j] = gs * e;
        }
        for l in (1..n_layers - 1).rev() {
            let ls = &layers[l];
            let (a, b) = (ls.a, ls.b);
            let m = tr.cm[l][i];
            let raw = &tr.craw_mid[l - 1];
            let prev = &tr.cv[l - 1];
            let mut g_prev = vec![0.0; b];
            for k in 0..a {
                let g_w = g_cv[k] / m;
                let h = tr.h[l][i * a + k];
                let t = 1.0 - h * h;
                let g_raw = g_w * t;
                g_t[l][i * a + k] += g_w * raw[i * a + k];
                let row = (i * a + k) * b;
                for j in 0..b {
                    let e = exps[l][row + j];
                    grads[ls.diag + row + j] += g_raw * e * prev[i * b + j];
                    g_prev[j] += g_raw * e;
                }
            }
            g_cv = g_prev;
        }
        let ls0 = &layers[0];
        let a0 = ls0.a;
        let m = tr.cm[0][i];
        for (k, &g) in g_cv.iter().enumerate() {
            let idx = i * a0 + k;
            // cv0 = exp(diag)*t/m, so d(cv0)/d(diag param) = cv0 itself.
            grads[ls0.diag_idx(i, k, 0)] += g * tr.cv[0][idx];
            g_t[0][idx] += g * exps[0][idx] / m;
        }
    }

    // Value chain backward, top layer down.
    let mut g_pre: Vec<f64> = g_t_out;
    for l in (0..n_layers).rev() {
        let ls = &layers[l];
        let (a, b) = (ls.a, ls.b);
        let cur: &[f64] = if l == 0 { &tr.u } else { &tr.h[l - 1] };
        let mut g_cur = vec![0.0; d * b];
        for i in 0..d {
            for k in 0..a {
                let g = g_pre[i * a + k];
                grads[ls.bias_idx(i, k)] += g;
                let row = (i * a + k) * b;
                for j in 0..b {
                    let e = exps[l][row + j];
                    grads[ls.diag + row + j] += g * cur[i * b + j] * e;
                    g_cur[i * b + j] += g * e;
                }
                for jf in 0..i {
                    let prow = (pair_index(i, jf) * a + k) * b;
                    for j in 0..b {
                        grads[ls.cross + prow + j] += g * cur[jf * b + j];
                        g_cur[jf * b + j] += g * params[ls.cross + prow + j];
                    }
                }
            }
        }
        if l == 0 {
            for i in 0..d {
                g_u[i] += g_cur[i];
            }
        } else {
            let hl = &tr.h[l - 1];
            let gt = &g_t[l - 1];
            g_pre = (0..d * b)
                .map(|r| {
                    let t = 1.0 - hl[r] * hl[r];
                    g_cur[r] * t - 2.0 * gt[r] * hl[r] * t
                })
                .collect();
        }
    }
    g_u
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowModel {
    config: FlowConfig,
    params: Vec<f64>,
    seed: u64,
    loss_trace: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SavedFlow {
    format_version: u32,
    kind: String,
    config: FlowConfig,
    seed: u64,
    params: Vec<f64>,
    loss_trace: Vec<f64>,
}

impl FlowModel {
    /// Fresh parameters: gates at zero, biases at zero, first-layer diagonal
    /// blocks near INIT_DIAG_SCALE, deeper ones near 1/fan-in (all with
    /// lognormal jitter), cross blocks near zero. The resulting map is
    /// linear per feature to within ~1e-6 relative.
    pub fn init(config: FlowConfig, rng: &mut SeededRng) -> Result<FlowModel> {
        config.validate()?;
        let shapes = Shapes::new(&config);
        let pairs = config.dim * (config.dim - 1) / 2;
        let mut params = vec![0.0; shapes.n_params];
        for fs in &shapes.flows {
            for (l, ls) in fs.layers.iter().enumerate() {
                let base =
                    if l == 0 { INIT_DIAG_SCALE.ln() } else { -((ls.b as f64).ln()) };
                for t in 0..config.dim * ls.a * ls.b {
                    params[ls.diag + t] = base + INIT_LOG_NOISE * rng.normal();
                }
                for t in 0..pairs * ls.a * ls.b {
                    params[ls.cross + t] = CROSS_INIT_STD * rng.normal();
                }
            }
        }
        Ok(FlowModel { config, params, seed: rng.seed(), loss_trace: Vec::new() })
    }

    /// Maximum-likelihood training with Adam on shuffled minibatches.
    /// Expects standardized data. A non-finite loss or gradient aborts with
    /// the offending step index.
    pub fn fit(data: &RealMatrix, config: FlowConfig, rng: &mut SeededRng) -> Result<FlowModel> {
        config.validate()?;
        if data.n_cols() != config.dim {
            return Err(AuditError::Dimension(format!(
                "flow over {} features fit on {}-column data",
                config.dim, data.n_cols()
            )));
        }
        if data.n_rows() == 0 {
            return Err(AuditError::Size("flow fit set is empty".into()));
        }
        let mut model = FlowModel::init(config, rng)?;
        let mut adam = AdamState::new(model.params.len(), config.lr);
        let n = data.n_rows();
        let mut step = 0usize;
        for _ in 0..config.epochs {
            let order = rng.permutation(n);
            let mut epoch_loss = 0.0;
            for chunk in order.chunks(config.batch) {
                let batch = data.select_rows(chunk)?;
                let (loss, grads) = Self::nll_and_grad(&config, &model.params, &batch)?;
                step += 1;
                if !loss.is_finite() {
                    return Err(AuditError::TrainingDiverged {
                        step,
                        message: format!("batch loss {loss}"),
                    });
                }
                adam_step(&mut model.params, &grads, &mut adam).map_err(|e| {
                    AuditError::TrainingDiverged { step, message: e.to_string() }
                })?;
                epoch_loss += loss * chunk.len() as f64;
            }
            model.loss_trace.push(epoch_loss / n as f64);
        }
        Ok(model)
    }

    /// Mean negative log-likelihood of a batch under the given parameters.
    pub fn nll(config: &FlowConfig, params: &[f64], batch: &RealMatrix) -> Result<f64> {
        Self::evaluate(config, params, batch, None)
    }

    /// Mean NLL and its gradient, both averaged over the batch.
    pub fn nll_and_grad(
        config: &FlowConfig,
        params: &[f64],
        batch: &RealMatrix,
    ) -> Result<(f64, Vec<f64>)> {
        let mut grads = vec![0.0; Shapes::new(config).n_params];
        let loss = Self::evaluate(config, params, batch, Some(&mut grads))?;
        Ok((loss, grads))
    }

    fn evaluate(
        config: &FlowConfig,
        params: &[f64],
        batch: &RealMatrix,
        mut grads: Option<&mut Vec<f64>>,
    ) -> Result<f64> {
        config.validate()?;
        let shapes = Shapes::new(config);
        if params.len() != shapes.n_params {
            return Err(AuditError::Dimension(format!(
                "{} parameters for a flow that needs {}",
                params.len(),
                shapes.n_params
            )));
        }
        if batch.n_cols() != config.dim || batch.n_rows() == 0 {
            return Err(AuditError::Dimension(format!(
                "batch of {}x{} under a {}-dimensional flow",
                batch.n_rows(), batch.n_cols(), config.dim
            )));
        }
        let exps = exp_diags(&shapes, params);
        let d = shapes.d;
        let mut total = 0.0;
        for row in batch.rows() {
            let mut traces: Vec<FlowTrace> = Vec::with_capacity(shapes.flows.len());
            let mut cur = row.to_vec();
            let mut sum_ld = 0.0;
            for (f, fs) in shapes.flows.iter().enumerate() {
                let tr = flow_forward(d, fs, params, &exps[f], &cur);
                cur = tr.y.clone();
                sum_ld += tr.ld.iter().sum::<f64>();
                traces.push(tr);
            }
            let mut loss = -sum_ld;
            for z in &cur {
                loss += 0.5 * (LN_2PI + z * z);
            }
            total += loss;
            if let Some(g) = grads.as_deref_mut() {
                let mut g_y = cur;
                for (f, fs) in shapes.flows.iter().enumerate().rev() {
                    g_y = flow_backward(d, fs, params, &exps[f], &traces[f], &g_y, g);
                }
            }
        }
        let n = batch.n_rows() as f64;
        if let Some(g) = grads {
            for v in g.iter_mut() {
                *v /= n;
            }
        }
        Ok(total / n)
    }

    /// Map a point through the stack; z = forward(x) follows a standard
    /// normal when the model fits the data.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_with_log_det(x)?.0)
    }

    /// Forward map plus the total log |dz/dx| across all flows.
    pub fn forward_with_log_det(&self, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        if x.len() != self.config.dim {
            return Err(AuditError::Dimension(format!(
                "point of length {} under a {}-dimensional flow",
                x.len(),
                self.config.dim
            )));
        }
        let shapes = Shapes::new(&self.config);
        let exps = exp_diags(&shapes, &self.params);
        let mut cur = x.to_vec();
        let mut sum_ld = 0.0;
        for (f, fs) in shapes.flows.iter().enumerate() {
            let tr = flow_forward(shapes.d, fs, &self.params, &exps[f], &cur);
            cur = tr.y.clone();
            sum_ld += tr.ld.iter().sum::<f64>();
        }
        Ok((cur, sum_ld))
    }

    pub fn config(&self) -> &FlowConfig {
        &self.config
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Mean NLL per epoch, recorded during fit.
    pub fn loss_trace(&self) -> &[f64] {
        &self.loss_trace
    }

    pub fn to_json(&self) -> String {
        let saved = SavedFlow {
            format_version: SAVE_VERSION,
            kind: "flow".into(),
            config: self.config,
            seed: self.seed,
            params: self.params.clone(),
            loss_trace: self.loss_trace.clone(),
        };
        serde_json::to_string(&saved).expect("flow state serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let saved: SavedFlow = serde_json::from_str(text)
            .map_err(|e| AuditError::Parse { row: 0, col: 0, message: e.to_string() })?;
        if saved.kind != "flow" {
            return Err(AuditError::Schema(format!("expected flow model, found {}", saved.kind)));
        }
        if saved.format_version != SAVE_VERSION {
            return Err(AuditError::Schema(format!(
                "unsupported flow format version {}",
                saved.format_version
            )));
        }
        saved.config.validate()?;
        let shapes = Shapes::new(&saved.config);
        if saved.params.len() != shapes.n_params {
            return Err(AuditError::Schema(format!(
                "flow file has {} parameters, config needs {}",
                saved.params.len(),
                shapes.n_params
            )));
        }
        if saved.params.iter().any(|p| !p.is_finite()) {
            return Err(AuditError::Schema("flow file contains non-finite parameters".into()));
        }
        Ok(FlowModel {
            config: saved.config,
            params: saved.params,
            seed: saved.seed,
            loss_trace: saved.loss_trace,
        })
    }
}

impl DensityModel for FlowModel {
    fn dim(&self) -> usize {
        self.config.dim
    }

    fn log_density(&self, x: &[f64]) -> Result<f64> {
        let (z, ld) = self.forward_with_log_det(x)?;
        let mut lp = ld;
        for zi in &z {
            lp += -0.5 * (LN_2PI + zi * zi);
        }
        Ok(lp)
    }
}
