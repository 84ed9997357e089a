//! Toy synthetic-data generators with tunable leakage, plus the scenario
//! builders used by the evaluation workflow. All generators consume and
//! produce standardized coordinates; the audit pipeline handles scaling.

use serde::{Deserialize, Serialize};

use crate::data::{Column, ColumnKind, Dataset, Schema};
use crate::density::{scott_bandwidth, GaussianComponent, GaussianMixture};
use crate::error::{AuditError, Result};
use crate::numcore::{cholesky, RealMatrix, SeededRng};

/// How synthetic rows are produced from the member set. The sigma of
/// additive noise is the privacy knob swept by the workflow: small sigma
/// memorizes members, large sigma washes them out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    /// Resample members with replacement and add N(0, sigma^2) per feature.
    AdditiveNoise { sigma: f64 },
    /// Additive noise at the KDE bandwidth: samples from the Scott-rule KDE
    /// fitted on the members (bandwidth can be overridden).
    SmoothedBootstrap { bandwidth: Option<f64> },
    /// Single Gaussian with the members' MLE mean and covariance.
    GaussianMle,
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            GeneratorSpec::AdditiveNoise { sigma } => {
                if !sigma.is_finite() || sigma < 0.0 {
                    return Err(AuditError::Parameter(format!(
                        "additive noise sigma must be >= 0, got {sigma}"
                    )));
                }
            }
            GeneratorSpec::SmoothedBootstrap { bandwidth: Some(h) } => {
                if !h.is_finite() || h <= 0.0 {
                    return Err(AuditError::Parameter(format!(
                        "bootstrap bandwidth must be positive, got {h}"
                    )));
                }
            }
            GeneratorSpec::SmoothedBootstrap { bandwidth: None } | GeneratorSpec::GaussianMle => {}
        }
        Ok(())
    }

    /// Short name used in reports and file names.
    pub fn name(&self) -> &'static str {
        match self {
            GeneratorSpec::AdditiveNoise { .. } => "additive_noise",
            GeneratorSpec::SmoothedBootstrap { .. } => "smoothed_bootstrap",
            GeneratorSpec::GaussianMle => "gaussian_mle",
        }
    }
}

/// Draw n_syn synthetic rows from the generator fitted on d_mem.
pub fn generate(
    spec: &GeneratorSpec,
    d_mem: &RealMatrix,
    n_syn: usize,
    rng: &mut SeededRng,
) -> Result<RealMatrix> {
    spec.validate()?;
    let (n, d) = (d_mem.n_rows(), d_mem.n_cols());
    if n == 0 || d == 0 {
        return Err(AuditError::Size("generator needs a non-empty member set".into()));
    }
    if n_syn == 0 {
        return Err(AuditError::Size("n_syn must be positive".into()));
    }
    match *spec {
        GeneratorSpec::AdditiveNoise { sigma } => {
            Ok(noisy_bootstrap(d_mem, n_syn, sigma, rng))
        }
        GeneratorSpec::SmoothedBootstrap { bandwidth } => {
            let h = bandwidth.unwrap_or_else(|| scott_bandwidth(n, d));
            Ok(noisy_bootstrap(d_mem, n_syn, h, rng))
        }
        GeneratorSpec::GaussianMle => {
            let means = d_mem.col_means();
            // MLE covariance (divide by n), flattened row-major.
            let mut cov = vec![0.0; d * d];
            for row in d_mem.rows() {
                for i in 0..d {
                    let ci = row[i] - means[i];
                    for j in 0..d {
                        cov[i * d + j] += ci * (row[j] - means[j]);
                    }
                }
            }
            for v in cov.iter_mut() {
                *v /= n as f64;
            }
            let l = cholesky(&cov, d).map_err(|e| {
                AuditError::Numeric(format!("member covariance is not positive definite: {e}"))
            })?;
            let mut rows = Vec::with_capacity(n_syn);
            for _ in 0..n_syn {
                let z: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
                let mut x = means.clone();
                for i in 0..d {
                    for j in 0..=i {
                        x[i] += l[i * d + j] * z[j];
                    }
                }
                rows.push(x);
            }
            RealMatrix::from_rows(&rows)
        }
    }
}

fn noisy_bootstrap(d_mem: &RealMatrix, n_syn: usize, sigma: f64, rng: &mut SeededRng) -> RealMatrix {
    let n = d_mem.n_rows();
    let mut rows = Vec::with_capacity(n_syn);
    for _ in 0..n_syn {
        let src = d_mem.row(rng.below(n));
        let row: Vec<f64> = src.iter().map(|v| v + sigma * rng.normal()).collect();
        rows.push(row);
    }
    RealMatrix::from_rows(&rows).expect("bootstrap rows are finite")
}

/// The bimodal illustration: real data is standard normal, the generator
/// overrepresents a narrow mode at 4. Returns (d_real, d_syn) draws.
pub fn scenario_fig2(
    n_real: usize,
    n_syn: usize,
    rng: &mut SeededRng,
) -> Result<(RealMatrix, RealMatrix)> {
    if n_real == 0 || n_syn == 0 {
        return Err(AuditError::Size("scenario sizes must be positive".into()));
    }
    let real = GaussianMixture::standard_normal(1).sample_n(n_real, rng);
    let syn = fig2_generator_density()?.sample_n(n_syn, rng);
    Ok((real, syn))
}

/// The generator density of the bimodal illustration:
/// 0.5 N(0,1) + 0.5 N(4, 0.2^2).
pub fn fig2_generator_density() -> Result<GaussianMixture> {
    GaussianMixture::new(vec![
        GaussianComponent { weight: 0.5, mean: vec![0.0], std: vec![1.0] },
        GaussianComponent { weight: 0.5, mean: vec![4.0], std: vec![0.2] },
    ])
}

/// Two-cluster population with a latent minority group: majority at the
/// origin, minority a fixed distance away with its own spread. The group
/// indicator is a binary column, available for subgroup reporting but
/// normally excluded from the attack features.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MinorityScenario {
    pub n: usize,
    /// Fraction of rows in the minority cluster.
    pub minority_frac: f64,
    /// Euclidean distance between the cluster centers.
    pub separation: f64,
    /// Minority cluster's per-axis standard deviation (majority uses 1).
    pub minority_scale: f64,
}

impl MinorityScenario {
    fn validate(&self) -> Result<()> {
        if self.n < 4 {
            return Err(AuditError::Size(format!("scenario of {} rows is too small", self.n)));
        }
        if !(0.0..=0.5).contains(&self.minority_frac) {
            return Err(AuditError::Parameter(format!(
                "minority_frac must be in [0, 0.5], got {}",
                self.minority_frac
            )));
        }
        if !self.separation.is_finite() || self.separation < 0.0 {
            return Err(AuditError::Parameter(format!(
                "separation must be >= 0, got {}",
                self.separation
            )));
        }
        if !self.minority_scale.is_finite() || self.minority_scale <= 0.0 {
            return Err(AuditError::Parameter(format!(
                "minority_scale must be positive, got {}",
                self.minority_scale
            )));
        }
        Ok(())
    }
}

/// Column name of the group indicator in minority-scenario pools.
pub const GROUP_COLUMN: &str = "group";

/// Build a minority-scenario pool: two continuous features and the binary
/// "group" column (1 = minority). Rows are shuffled so any prefix is an
/// exchangeable sample.
pub fn gauss_mixture_minority(sc: &MinorityScenario, rng: &mut SeededRng) -> Result<Dataset> {
    sc.validate()?;
    let n_minority = (sc.minority_frac * sc.n as f64).round() as usize;
    let shift = sc.separation / 2f64.sqrt();
    let mut rows = Vec::with_capacity(sc.n);
    for i in 0..sc.n {
        let minority = i < n_minority;
        let (center, scale) = if minority { (shift, sc.minority_scale) } else { (0.0, 1.0) };
        rows.push(vec![
            center + scale * rng.normal(),
            center + scale * rng.normal(),
            if minority { 1.0 } else { 0.0 },
        ]);
    }
    rng.shuffle(&mut rows);
    let schema = Schema {
        columns: vec![
            Column { name: "f0".into(), kind: ColumnKind::Continuous },
            Column { name: "f1".into(), kind: ColumnKind::Continuous },
            Column { name: GROUP_COLUMN.into(), kind: ColumnKind::Binary },
        ],
    };
    Dataset::new(schema, RealMatrix::from_rows(&rows)?)
}
