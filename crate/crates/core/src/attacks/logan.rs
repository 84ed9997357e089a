//! Classifier-based attacks. The black-box variant trains a small GAN on
//! the synthetic rows and reads membership off the discriminator logit;
//! the reference-aware variant trains a synthetic-vs-reference classifier
//! directly.

use crate::attacks::mlp::{
    bce_loss_and_grad, mlp_backward, mlp_forward, train_classifier, MlpNet, MlpShape, TrainConfig,
};
use crate::error::{AuditError, Result};
use crate::numcore::{adam_step, sigmoid, softplus, AdamState, RealMatrix, SeededRng};
use serde::{Deserialize, Serialize};

/// Architecture and optimization settings for both classifier attacks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub hidden: usize,
    pub train: TrainConfig,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig { hidden: 32, train: TrainConfig::default() }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 {
            return Err(AuditError::Parameter("hidden width must be positive".into()));
        }
        self.train.validate()
    }
}

/// Train a GAN on the synthetic rows and return the discriminator. The
/// generator maps a standard-normal latent of the same dimension as the
/// data; the discriminator sees real synthetic rows against generator
/// output. Non-saturating generator loss.
fn fit_gan_discriminator(
    d_syn: &RealMatrix,
    cfg: &ClassifierConfig,
    rng: &mut SeededRng,
) -> Result<MlpNet> {
    let dim = d_syn.n_cols();
    let d_shape = MlpShape { in_dim: dim, hidden: cfg.hidden, out_dim: 1 };
    let g_shape = MlpShape { in_dim: dim, hidden: cfg.hidden, out_dim: dim };
    let mut disc = MlpNet::init(d_shape, rng)?;
    let mut gen = MlpNet::init(g_shape, rng)?;
    let mut d_adam = AdamState::new(disc.params.len(), cfg.train.lr);
    let mut g_adam = AdamState::new(gen.params.len(), cfg.train.lr);
    let n = d_syn.n_rows();
    let mut step = 0usize;
    let mut d_scratch = vec![0.0; disc.params.len()];
    for _ in 0..cfg.train.epochs {
        let order = rng.permutation(n);
        for chunk in order.chunks(cfg.train.batch) {
            step += 1;
            let b = chunk.len();
            // Discriminator step: real rows labeled 1, generator output 0.
            let mut rows: Vec<Vec<f64>> = chunk.iter().map(|&i| d_syn.row(i).to_vec()).collect();
            for _ in 0..b {
                let z: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
                rows.push(gen.forward(&z));
            }
            let batch = RealMatrix::from_rows(&rows)?;
            let mut labels = vec![1.0; b];
            labels.extend(std::iter::repeat_n(0.0, b));
            let (d_loss, d_grads) = bce_loss_and_grad(&d_shape, &disc.params, &batch, &labels)?;
            if !d_loss.is_finite() {
                return Err(AuditError::TrainingDiverged {
                    step,
                    message: format!("discriminator loss {d_loss}"),
                });
            }
            adam_step(&mut disc.params, &d_grads, &mut d_adam)
                .map_err(|e| AuditError::TrainingDiverged { step, message: e.to_string() })?;
            // Generator step on fresh latents: minimize softplus(-logit),
            // pushing the discriminator toward calling fakes real.
            let mut g_grads = vec![0.0; gen.params.len()];
            let mut g_loss = 0.0;
            for _ in 0..b {
                let z: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
                let (fake, g_cache) = mlp_forward(&g_shape, &gen.params, &z);
                let (out, d_cache) = mlp_forward(&d_shape, &disc.params, &fake);
                let logit = out[0];
                g_loss += softplus(-logit);
                let g_logit = sigmoid(logit) - 1.0;
                d_scratch.iter_mut().for_each(|v| *v = 0.0);
                let g_fake =
                    mlp_backward(&d_shape, &disc.params, &d_cache, &fake, &[g_logit], &mut d_scratch);
                mlp_backward(&g_shape, &gen.params, &g_cache, &z, &g_fake, &mut g_grads);
            }
            g_loss /= b as f64;
            g_grads.iter_mut().for_each(|v| *v /= b as f64);
            if !g_loss.is_finite() {
                return Err(AuditError::TrainingDiverged {
                    step,
                    message: format!("generator loss {g_loss}"),
                });
            }
            adam_step(&mut gen.params, &g_grads, &mut g_adam)
                .map_err(|e| AuditError::TrainingDiverged { step, message: e.to_string() })?;
        }
    }
    Ok(disc)
}

/// Black-box attack: GAN discriminator logit on each test row.
pub fn gan_discriminator_scores(
    d_syn: &RealMatrix,
    d_test: &RealMatrix,
    cfg: &ClassifierConfig,
    rng: &mut SeededRng,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if d_syn.n_rows() == 0 {
        return Err(AuditError::Size("no synthetic rows to train on".into()));
    }
    if d_syn.n_cols() != d_test.n_cols() {
        return Err(AuditError::Dimension(format!(
            "synthetic has {} columns, test has {}",
            d_syn.n_cols(),
            d_test.n_cols()
        )));
    }
    let disc = fit_gan_discriminator(d_syn, cfg, rng)?;
    Ok(d_test.rows().map(|x| disc.logit(x)).collect())
}

/// Reference-aware attack: logit of a synthetic-vs-reference classifier.
/// High scores mark rows that look more synthetic than population-like.
pub fn syn_vs_ref_scores(
    d_syn: &RealMatrix,
    d_ref: &RealMatrix,
    d_test: &RealMatrix,
    cfg: &ClassifierConfig,
    rng: &mut SeededRng,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if d_syn.n_rows() == 0 || d_ref.n_rows() == 0 {
        return Err(AuditError::Size("classifier needs synthetic and reference rows".into()));
    }
    if d_syn.n_cols() != d_test.n_cols() || d_ref.n_cols() != d_test.n_cols() {
        return Err(AuditError::Dimension(
            "synthetic, reference and test column counts differ".into(),
        ));
    }
    let xs = d_syn.vstack(d_ref)?;
    let mut labels = vec![1.0; d_syn.n_rows()];
    labels.extend(std::iter::repeat_n(0.0, d_ref.n_rows()));
    let net = train_classifier(&xs, &labels, cfg.hidden, &cfg.train, rng)?;
    Ok(d_test.rows().map(|x| net.logit(x)).collect())
}
