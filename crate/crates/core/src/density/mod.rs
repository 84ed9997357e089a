//! Density estimation behind the ratio attack: kernel density estimates,
//! a masked autoregressive flow, and closed-form Gaussian mixtures for
//! scenarios where the truth is known analytically.

mod closed_form;
mod flow;
mod kde;

pub use closed_form::{GaussianComponent, GaussianMixture, MonotoneMap, TransformedDensity};
pub use flow::{FlowConfig, FlowModel, INIT_DIAG_SCALE};
pub use kde::{scott_bandwidth, KdeModel};

use crate::data::Dataset;
use crate::error::{AuditError, Result};

pub trait DensityModel {
    fn dim(&self) -> usize;

    /// Natural-log density at a point. Finite for finite points inside the
    /// model's regime; dimension mismatch is an error.
    fn log_density(&self, x: &[f64]) -> Result<f64>;
}

/// Log-density of every row of a dataset under one model.
pub fn log_densities(model: &dyn DensityModel, data: &Dataset) -> Result<Vec<f64>> {
    if data.n_cols() != model.dim() {
        return Err(AuditError::Dimension(format!(
            "model over {} features scoring {}-column data",
            model.dim(),
            data.n_cols()
        )));
    }
    data.values.rows().map(|row| model.log_density(row)).collect()
}

/// Midpoint-rule integral of exp(log_density) over an axis-aligned box,
/// `steps` cells per axis. Supports d = 1 and d = 2; used to verify that
/// fitted models are normalized.
pub fn density_grid_integral(
    model: &dyn DensityModel,
    lo: &[f64],
    hi: &[f64],
    steps: usize,
) -> Result<f64> {
    let d = model.dim();
    if lo.len() != d || hi.len() != d {
        return Err(AuditError::Dimension(format!(
            "bounds of length {}/{} for a {}-dimensional model",
            lo.len(),
            hi.len(),
            d
        )));
    }
    if steps == 0 {
        return Err(AuditError::Parameter("steps must be positive".into()));
    }
    match d {
        1 => {
            let w = (hi[0] - lo[0]) / steps as f64;
            let mut total = 0.0;
            for i in 0..steps {
                let x = lo[0] + (i as f64 + 0.5) * w;
                total += model.log_density(&[x])?.exp();
            }
            Ok(total * w)
        }
        2 => {
            let wx = (hi[0] - lo[0]) / steps as f64;
            let wy = (hi[1] - lo[1]) / steps as f64;
            let mut total = 0.0;
            for i in 0..steps {
                let x = lo[0] + (i as f64 + 0.5) * wx;
                for j in 0..steps {
                    let y = lo[1] + (j as f64 + 0.5) * wy;
                    total += model.log_density(&[x, y])?.exp();
                }
            }
            Ok(total * wx * wy)
        }
        _ => Err(AuditError::Parameter(format!(
            "grid integral supports 1 or 2 dimensions, model has {d}"
        ))),
    }
}
