//! Membership-inference scorers. Every attack maps test rows to real
//! scores where larger means more member-like; thresholds and rankings are
//! the eval module's business.
//!
//! The density-ratio scorer and its ablations live here directly; the
//! trained baselines (GAN discriminator, synthetic-vs-reference classifier)
//! and the geometric baselines (radius count, nearest neighbor) sit in
//! submodules.

pub mod distance;
pub mod logan;
pub mod mlp;

pub use distance::{
    calibrated_nearest_scores, nearest_syn_scores, radius_count_scores, NearestConfig,
    RadiusConfig,
};
pub use logan::{gan_discriminator_scores, syn_vs_ref_scores, ClassifierConfig};
pub use mlp::{MlpNet, MlpShape, TrainConfig};

use crate::data::Dataset;
use crate::error::{AuditError, Result};
use crate::generators::{generate, GeneratorSpec};
use crate::numcore::{log_std_normal, RealMatrix, SeededRng};
use serde::{Deserialize, Serialize};

/// Per-test-row scores of one attacker, plus enough metadata to rerun it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackScores {
    pub name: String,
    pub scores: Vec<f64>,
    /// Effective settings, including data-derived defaults.
    pub config: String,
    /// Seed of the attacker's private stream; absent for deterministic
    /// scorers.
    pub seed: Option<u64>,
}

impl AttackScores {
    fn checked(name: &str, scores: Vec<f64>, config: String, seed: Option<u64>) -> Result<Self> {
        if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
            return Err(AuditError::Numeric(format!(
                "attacker {name} produced a non-finite score {bad}"
            )));
        }
        Ok(AttackScores { name: name.into(), scores, config, seed })
    }
}

fn require_finite(name: &str, values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(AuditError::Numeric(format!(
            "{name} contains a non-finite log-density"
        )));
    }
    Ok(())
}

/// Density-ratio attack: score = log p_G(x) - log p_R(x). The monotone
/// outer map is fixed to identity on the log-ratio; every downstream
/// metric is rank- or threshold-based, so the choice is immaterial.
pub fn domias(log_pg: &[f64], log_pr: &[f64]) -> Result<AttackScores> {
    if log_pg.len() != log_pr.len() {
        return Err(AuditError::Dimension(format!(
            "{} generator log-densities vs {} reference",
            log_pg.len(),
            log_pr.len()
        )));
    }
    require_finite("log_pg", log_pg)?;
    require_finite("log_pr", log_pr)?;
    let scores = log_pg.iter().zip(log_pr.iter()).map(|(g, r)| g - r).collect();
    AttackScores::checked("domias", scores, "score=log_pg-log_pr".into(), None)
}

/// Ablation that ignores the real distribution: score = log p_G(x).
/// Not representation-invariant, which is the point of keeping it around.
pub fn pg_only(log_pg: &[f64]) -> Result<AttackScores> {
    require_finite("log_pg", log_pg)?;
    AttackScores::checked("pg_only", log_pg.to_vec(), "score=log_pg".into(), None)
}

/// Gaussian prior on one feature, known only through (mean, std).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorFeature {
    pub name: String,
    pub mean: f64,
    pub std: f64,
}

/// Partial knowledge of the real distribution: independent Gaussian priors
/// on some features, an improper uniform prior on the rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub features: Vec<PriorFeature>,
}

impl PriorSpec {
    /// N(0,1) on every feature: the natural prior on standardized data.
    pub fn standard_on_all(dataset: &Dataset) -> PriorSpec {
        PriorSpec {
            features: dataset
                .schema
                .columns
                .iter()
                .map(|c| PriorFeature { name: c.name.clone(), mean: 0.0, std: 1.0 })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.is_empty() {
            return Err(AuditError::Parameter(
                "prior must constrain at least one feature".into(),
            ));
        }
        for f in &self.features {
            if !f.mean.is_finite() {
                return Err(AuditError::Parameter(format!(
                    "prior mean for {:?} must be finite",
                    f.name
                )));
            }
            if !f.std.is_finite() || f.std <= 0.0 {
                return Err(AuditError::Parameter(format!(
                    "prior std for {:?} must be positive, got {}",
                    f.name, f.std
                )));
            }
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        let parts: Vec<String> = self
            .features
            .iter()
            .map(|f| format!("{}~N({},{})", f.name, f.mean, f.std))
            .collect();
        parts.join(",")
    }
}

/// Density-ratio attack with the reference density replaced by the prior:
/// score = log p_G(x) - sum over prior features of log N(x_j; mu_j, sigma_j).
/// Uniform-prior features contribute a constant and are dropped.
pub fn gaussian_prior_domias(
    log_pg: &[f64],
    d_test: &Dataset,
    prior: &PriorSpec,
) -> Result<AttackScores> {
    prior.validate()?;
    require_finite("log_pg", log_pg)?;
    if log_pg.len() != d_test.n_rows() {
        return Err(AuditError::Dimension(format!(
            "{} log-densities for {} test rows",
            log_pg.len(),
            d_test.n_rows()
        )));
    }
    let mut cols = Vec::with_capacity(prior.features.len());
    for f in &prior.features {
        let j = d_test.schema.index_of(&f.name).ok_or_else(|| {
            AuditError::Schema(format!("prior feature {:?} not in test schema", f.name))
        })?;
        cols.push((j, f.mean, f.std));
    }
    let scores = (0..d_test.n_rows())
        .map(|i| {
            let mut s = log_pg[i];
            for &(j, mean, std) in &cols {
                let x = d_test.values.get(i, j);
                s -= log_std_normal((x - mean) / std) - std.ln();
            }
            s
        })
        .collect();
    AttackScores::checked(
        "gaussian_prior_domias",
        scores,
        format!("prior[{}]", prior.describe()),
        None,
    )
}

/// GAN discriminator attack on the synthetic rows alone.
pub fn logan0(
    d_syn: &RealMatrix,
    d_test: &RealMatrix,
    cfg: &ClassifierConfig,
    rng: &mut SeededRng,
) -> Result<AttackScores> {
    let seed = rng.seed();
    let scores = gan_discriminator_scores(d_syn, d_test, cfg, rng)?;
    AttackScores::checked(
        "logan0",
        scores,
        format!(
            "gan hidden={} epochs={} batch={} lr={}",
            cfg.hidden, cfg.train.epochs, cfg.train.batch, cfg.train.lr
        ),
        Some(seed),
    )
}

/// Synthetic-vs-reference classifier attack.
pub fn logan_d1(
    d_syn: &RealMatrix,
    d_ref: &RealMatrix,
    d_test: &RealMatrix,
    cfg: &ClassifierConfig,
    rng: &mut SeededRng,
) -> Result<AttackScores> {
    let seed = rng.seed();
    let scores = syn_vs_ref_scores(d_syn, d_ref, d_test, cfg, rng)?;
    AttackScores::checked(
        "logan_d1",
        scores,
        format!(
            "classifier hidden={} epochs={} batch={} lr={}",
            cfg.hidden, cfg.train.epochs, cfg.train.batch, cfg.train.lr
        ),
        Some(seed),
    )
}

/// Radius-count attack; epsilon defaults to the median nearest-neighbor
/// distance within the synthetic set and is echoed in the config string.
pub fn mc_score(
    d_syn: &RealMatrix,
    d_test: &RealMatrix,
    cfg: &RadiusConfig,
) -> Result<AttackScores> {
    let (scores, epsilon) = radius_count_scores(d_syn, d_test, cfg)?;
    let eps_src = if cfg.epsilon.is_some() { "explicit" } else { "median-nn" };
    let pca = match cfg.pca_components {
        Some(k) => format!("pca={k}"),
        None => "pca=off".into(),
    };
    AttackScores::checked(
        "mc_score",
        scores,
        format!("epsilon={epsilon} ({eps_src}), {pca}"),
        None,
    )
}

/// Negated nearest-neighbor distance to (a k-subsample of) the synthetic
/// rows.
pub fn ganleaks0(
    d_syn: &RealMatrix,
    d_test: &RealMatrix,
    k: Option<usize>,
    rng: &mut SeededRng,
) -> Result<AttackScores> {
    let seed = rng.seed();
    let cfg = NearestConfig { subsample: k };
    let scores = nearest_syn_scores(d_syn, d_test, &cfg, rng)?;
    AttackScores::checked(
        "ganleaks0",
        scores,
        format!("k={}", k.unwrap_or(d_syn.n_rows())),
        Some(seed),
    )
}

/// Calibrated nearest-neighbor attack: a reference generator of the same
/// toy class is trained on d_ref and its output plays the role of "what a
/// non-overfit generator would publish". Scores are
/// min-dist(reference synthetic) - min-dist(audited synthetic).
pub fn ganleaks_cal(
    d_syn: &RealMatrix,
    d_ref: &RealMatrix,
    d_test: &RealMatrix,
    k: Option<usize>,
    ref_gen: &GeneratorSpec,
    rng: &mut SeededRng,
) -> Result<AttackScores> {
    let seed = rng.seed();
    let k_rows = match k {
        Some(0) => return Err(AuditError::Parameter("k must be positive".into())),
        Some(k) => k,
        None => d_syn.n_rows(),
    };
    let ref_syn = generate(ref_gen, d_ref, k_rows, rng)?;
    let cfg = NearestConfig { subsample: k };
    let scores = calibrated_nearest_scores(d_syn, &ref_syn, d_test, &cfg, rng)?;
    AttackScores::checked(
        "ganleaks_cal",
        scores,
        format!("k={k_rows}, ref_gen={}", ref_gen.name()),
        Some(seed),
    )
}
