//! Central-difference gradient verification. Every hand-written backward
//! pass in this crate (flow, classifier nets) is required to pass this check
//! in its tests; the tolerance formula is part of the contract.

use crate::error::{AuditError, Result};

/// Perturbation used for central differences.
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy)]
pub struct GradCheckOutcome {
    pub passed: bool,
    pub max_rel_err: f64,
    /// Index of the worst coordinate, handy when a check fails.
    pub worst_index: usize,
}

/// Compare `analytic` against central differences of `loss` at `params`.
///
/// Relative error per coordinate is |analytic - numeric| / (|numeric| + 1e-8).
/// A non-finite loss at any probe point is an error, not a failed check.
pub fn finite_diff_check<F>(
    loss: F,
    params: &[f64],
    analytic: &[f64],
    rel_tol: f64,
) -> Result<GradCheckOutcome>
where
    F: FnMut(&[f64]) -> f64,
{
    finite_diff_check_with_floor(loss, params, analytic, rel_tol, 0.0)
}

/// Like finite_diff_check, but a coordinate also passes when
/// |analytic - numeric| <= abs_floor. Central differences carry noise of
/// order eps*|loss|/step, so coordinates whose true gradient sits near zero
/// fail the relative test spuriously; the floor admits exactly those while
/// still catching sign or missing-term bugs, which show up well above it.
pub fn finite_diff_check_with_floor<F>(
    mut loss: F,
    params: &[f64],
    analytic: &[f64],
    rel_tol: f64,
    abs_floor: f64,
) -> Result<GradCheckOutcome>
where
    F: FnMut(&[f64]) -> f64,
{
    if params.len() != analytic.len() {
        return Err(AuditError::Dimension(format!(
            "finite_diff_check: {} params but {} analytic gradients",
            params.len(),
            analytic.len()
        )));
    }
    let mut probe = params.to_vec();
    let mut max_rel_err = 0.0f64;
    let mut worst_index = 0usize;
    for i in 0..params.len() {
        let orig = probe[i];
        probe[i] = orig + FD_STEP;
        let up = loss(&probe);
        probe[i] = orig - FD_STEP;
        let down = loss(&probe);
        probe[i] = orig;
        if !up.is_finite() || !down.is_finite() {
            return Err(AuditError::Numeric(format!(
                "non-finite loss while probing parameter {i}"
            )));
        }
        let numeric = (up - down) / (2.0 * FD_STEP);
        let gap = (analytic[i] - numeric).abs();
        if gap <= abs_floor {
            continue;
        }
        let rel = gap / (numeric.abs() + 1e-8);
        if rel > max_rel_err {
            max_rel_err = rel;
            worst_index = i;
        }
    }
    Ok(GradCheckOutcome {
        passed: max_rel_err <= rel_tol,
        max_rel_err,
        worst_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_with_wrong_gradient() {
        // loss = p^2 / 2, analytic gradient claimed 2.9 at p = 3:
        // numeric is 3, relative error 0.1 / 3 = 0.0333..
        let out = finite_diff_check(|p| 0.5 * p[0] * p[0], &[3.0], &[2.9], 1e-4).unwrap();
        assert!(!out.passed);
        assert!((out.max_rel_err - 0.1 / 3.0).abs() < 1e-6, "{}", out.max_rel_err);
    }

    #[test]
    fn quadratic_with_right_gradient() {
        let out = finite_diff_check(|p| 0.5 * p[0] * p[0], &[3.0], &[3.0], 1e-4).unwrap();
        assert!(out.passed, "rel err {}", out.max_rel_err);
    }

    #[test]
    fn multivariate_smooth_function() {
        // loss = sin(a) * exp(b) + a * b
        let f = |p: &[f64]| p[0].sin() * p[1].exp() + p[0] * p[1];
        let p: [f64; 2] = [0.7, -0.3];
        let g = [
            p[0].cos() * p[1].exp() + p[1],
            p[0].sin() * p[1].exp() + p[0],
        ];
        let out = finite_diff_check(f, &p, &g, 1e-6).unwrap();
        assert!(out.passed, "rel err {}", out.max_rel_err);
    }

    #[test]
    fn non_finite_probe_is_an_error() {
        let f = |p: &[f64]| p[0].ln(); // ln of a negative probe is NaN
        let err = finite_diff_check(f, &[1e-6], &[1e6], 1e-4);
        assert!(err.is_err());
    }

    #[test]
    fn absolute_floor_absolves_only_tiny_gaps() {
        // Gradient off by 5e-8 on a near-flat coordinate: the relative test
        // alone would reject it, the floored variant accepts.
        let f = |p: &[f64]| 1e-7 * p[0];
        let plain = finite_diff_check(f, &[0.2], &[1.5e-7], 1e-4).unwrap();
        assert!(!plain.passed);
        let floored = finite_diff_check_with_floor(f, &[0.2], &[1.5e-7], 1e-4, 1e-7).unwrap();
        assert!(floored.passed);
        // A sign flip on a real gradient stays caught.
        let bad = finite_diff_check_with_floor(
            |p: &[f64]| 0.5 * p[0] * p[0],
            &[3.0],
            &[-3.0],
            1e-4,
            1e-7,
        )
        .unwrap();
        assert!(!bad.passed);
    }
}
