//! Analytic densities: diagonal Gaussian mixtures and their images under
//! per-feature monotone maps. These give scenarios where both the true and
//! the generator density are known exactly, so attack scores can be checked
//! against hand-computed values.

use serde::{Deserialize, Serialize};

use super::DensityModel;
use crate::error::{AuditError, Result};
use crate::numcore::{log_sum_exp, RealMatrix, SeededRng, LN_2PI};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Mixture of axis-aligned Gaussians. Weights must sum to 1 within 1e-12
/// and every scale must be positive; both are constructor-enforced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianMixture {
    components: Vec<GaussianComponent>,
    dim: usize,
}

impl GaussianMixture {
    pub fn new(components: Vec<GaussianComponent>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| AuditError::Parameter("mixture needs at least one component".into()))?;
        let dim = first.mean.len();
        if dim == 0 {
            return Err(AuditError::Parameter("mixture components must have features".into()));
        }
        let mut total = 0.0;
        for (k, c) in components.iter().enumerate() {
            if c.mean.len() != dim || c.std.len() != dim {
                return Err(AuditError::Dimension(format!(
                    "component {k} has mean/std of length {}/{}, expected {dim}",
                    c.mean.len(),
                    c.std.len()
                )));
            }
            if !c.weight.is_finite() || c.weight <= 0.0 {
                return Err(AuditError::Parameter(format!(
                    "component {k} weight {} is not positive",
                    c.weight
                )));
            }
            if c.mean.iter().any(|m| !m.is_finite()) {
                return Err(AuditError::Parameter(format!("component {k} mean is not finite")));
            }
            if c.std.iter().any(|s| !s.is_finite() || *s <= 0.0) {
                return Err(AuditError::Parameter(format!(
                    "component {k} scales must be positive and finite"
                )));
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(AuditError::Parameter(format!(
                "mixture weights sum to {total}, expected 1"
            )));
        }
        Ok(GaussianMixture { components, dim })
    }

    pub fn standard_normal(dim: usize) -> Self {
        GaussianMixture::new(vec![GaussianComponent {
            weight: 1.0,
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }])
        .expect("standard normal is a valid mixture")
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    pub fn sample(&self, rng: &mut SeededRng) -> Vec<f64> {
        let mut u = rng.uniform();
        let mut pick = self.components.len() - 1;
        for (k, c) in self.components.iter().enumerate() {
            if u < c.weight {
                pick = k;
                break;
            }
            u -= c.weight;
        }
        let c = &self.components[pick];
        (0..self.dim).map(|j| c.mean[j] + c.std[j] * rng.normal()).collect()
    }

    pub fn sample_n(&self, n: usize, rng: &mut SeededRng) -> RealMatrix {
        let rows: Vec<Vec<f64>> = (0..n).map(|_| self.sample(rng)).collect();
        RealMatrix::from_rows(&rows).expect("mixture samples are finite")
    }
}

impl DensityModel for GaussianMixture {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(AuditError::Dimension(format!(
                "point of length {} under a {}-dimensional mixture",
                x.len(),
                self.dim
            )));
        }
        let terms: Vec<f64> = self
            .components
            .iter()
            .map(|c| {
                let mut lp = c.weight.ln();
                for ((xj, mj), sj) in x.iter().zip(&c.mean).zip(&c.std) {
                    let z = (xj - mj) / sj;
                    lp += -0.5 * (LN_2PI + z * z) - sj.ln();
                }
                lp
            })
            .collect();
        Ok(log_sum_exp(&terms))
    }
}

/// Strictly increasing scalar map applied to one feature.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MonotoneMap {
    Identity,
    /// x -> scale*x + shift with scale > 0.
    Affine { scale: f64, shift: f64 },
    /// x -> ln(x + offset), defined for x > -offset.
    LogShift { offset: f64 },
    /// x -> exp(x).
    Exp,
}

impl MonotoneMap {
    pub fn forward(&self, x: f64) -> f64 {
        match *self {
            MonotoneMap::Identity => x,
            MonotoneMap::Affine { scale, shift } => scale * x + shift,
            MonotoneMap::LogShift { offset } => (x + offset).ln(),
            MonotoneMap::Exp => x.exp(),
        }
    }

    pub fn inverse(&self, y: f64) -> f64 {
        match *self {
            MonotoneMap::Identity => y,
            MonotoneMap::Affine { scale, shift } => (y - shift) / scale,
            MonotoneMap::LogShift { offset } => y.exp() - offset,
            MonotoneMap::Exp => y.ln(),
        }
    }

    /// ln g'(x) at a point of the original space.
    pub fn log_deriv(&self, x: f64) -> f64 {
        match *self {
            MonotoneMap::Identity => 0.0,
            MonotoneMap::Affine { scale, .. } => scale.ln(),
            MonotoneMap::LogShift { offset } => -(x + offset).ln(),
            MonotoneMap::Exp => x,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            MonotoneMap::Affine { scale, shift } => {
                if !scale.is_finite() || scale <= 0.0 || !shift.is_finite() {
                    return Err(AuditError::Parameter(format!(
                        "affine map needs positive finite scale, got scale {scale} shift {shift}"
                    )));
                }
            }
            MonotoneMap::LogShift { offset } => {
                if !offset.is_finite() {
                    return Err(AuditError::Parameter("log-shift offset must be finite".into()));
                }
            }
            MonotoneMap::Identity | MonotoneMap::Exp => {}
        }
        Ok(())
    }
}

/// Density of Y where Y_j = map_j(X_j) and X follows a known mixture:
/// log p(y) = log p_base(g^{-1}(y)) - sum_j ln g_j'(g_j^{-1}(y_j)).
/// Points outside a map's range get density zero (-inf log-density).
#[derive(Debug, Clone)]
pub struct TransformedDensity {
    base: GaussianMixture,
    maps: Vec<MonotoneMap>,
}

impl TransformedDensity {
    pub fn new(base: GaussianMixture, maps: Vec<MonotoneMap>) -> Result<Self> {
        if maps.len() != base.dim() {
            return Err(AuditError::Dimension(format!(
                "{} maps for a {}-dimensional base",
                maps.len(),
                base.dim()
            )));
        }
        for m in &maps {
            m.validate()?;
        }
        Ok(TransformedDensity { base, maps })
    }

    /// Image of an original-space point, feature by feature.
    pub fn forward_point(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.maps.len() {
            return Err(AuditError::Dimension(format!(
                "point of length {} under {} maps",
                x.len(),
                self.maps.len()
            )));
        }
        Ok(x.iter().zip(&self.maps).map(|(&v, m)| m.forward(v)).collect())
    }

    pub fn forward_rows(&self, rows: &RealMatrix) -> Result<RealMatrix> {
        let mapped: Result<Vec<Vec<f64>>> =
            rows.rows().map(|r| self.forward_point(r)).collect();
        RealMatrix::from_rows(&mapped?)
    }
}

impl DensityModel for TransformedDensity {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn log_density(&self, y: &[f64]) -> Result<f64> {
        if y.len() != self.base.dim() {
            return Err(AuditError::Dimension(format!(
                "point of length {} under a {}-dimensional density",
                y.len(),
                self.base.dim()
            )));
        }
        let mut x = Vec::with_capacity(y.len());
        let mut log_jac = 0.0;
        for (m, &yj) in self.maps.iter().zip(y.iter()) {
            let xj = m.inverse(yj);
            if !xj.is_finite() {
                // Outside the map's range, e.g. y <= 0 under Exp.
                return Ok(f64::NEG_INFINITY);
            }
            log_jac += m.log_deriv(xj);
            x.push(xj);
        }
        Ok(self.base.log_density(&x)? - log_jac)
    }
}
