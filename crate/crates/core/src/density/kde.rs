//! Isotropic Gaussian kernel density estimation.

use serde::{Deserialize, Serialize};

use super::DensityModel;
use crate::error::{AuditError, Result};
use crate::numcore::{RealMatrix, LN_2PI};

/// Scott's rule for standardized data: n^(-1/(d+4)).
pub fn scott_bandwidth(n: usize, d: usize) -> f64 {
    (-(n as f64).ln() / (d as f64 + 4.0)).exp()
}

/// KDE with a single isotropic Gaussian bandwidth shared by all features.
/// Expects standardized coordinates; the bandwidth defaults to Scott's rule.
#[derive(Debug, Clone)]
pub struct KdeModel {
    points: RealMatrix,
    bandwidth: f64,
}

const SAVE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct SavedKde {
    format_version: u32,
    kind: String,
    bandwidth: f64,
    n_rows: usize,
    n_cols: usize,
    points: Vec<f64>,
}

impl KdeModel {
    /// `bandwidth` of None selects Scott's rule from the fit set size.
    pub fn fit(points: &RealMatrix, bandwidth: Option<f64>) -> Result<Self> {
        if points.n_rows() == 0 {
            return Err(AuditError::Size("KDE fit set is empty".into()));
        }
        let h = match bandwidth {
            Some(h) if h.is_finite() && h > 0.0 => h,
            Some(h) => {
                return Err(AuditError::Parameter(format!(
                    "bandwidth must be positive and finite, got {h}"
                )))
            }
            None => scott_bandwidth(points.n_rows(), points.n_cols()),
        };
        Ok(KdeModel { points: points.clone(), bandwidth: h })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn n_points(&self) -> usize {
        self.points.n_rows()
    }

    pub fn to_json(&self) -> String {
        let saved = SavedKde {
            format_version: SAVE_VERSION,
            kind: "kde".into(),
            bandwidth: self.bandwidth,
            n_rows: self.points.n_rows(),
            n_cols: self.points.n_cols(),
            points: self.points.data().to_vec(),
        };
        serde_json::to_string(&saved).expect("KDE state serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let saved: SavedKde = serde_json::from_str(text)
            .map_err(|e| AuditError::Parse { row: 0, col: 0, message: e.to_string() })?;
        if saved.kind != "kde" {
            return Err(AuditError::Schema(format!("expected kde model, found {}", saved.kind)));
        }
        if saved.format_version != SAVE_VERSION {
            return Err(AuditError::Schema(format!(
                "unsupported kde format version {}",
                saved.format_version
            )));
        }
        let points = RealMatrix::from_vec(saved.n_rows, saved.n_cols, saved.points)?;
        Self::fit(&points, Some(saved.bandwidth))
    }
}

impl DensityModel for KdeModel {
    fn dim(&self) -> usize {
        self.points.n_cols()
    }

    fn log_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.points.n_cols() {
            return Err(AuditError::Dimension(format!(
                "point of length {} under a {}-dimensional KDE",
                x.len(),
                self.points.n_cols()
            )));
        }
        let n = self.points.n_rows() as f64;
        let d = self.points.n_cols() as f64;
        let inv_two_h2 = 1.0 / (2.0 * self.bandwidth * self.bandwidth);
        // Squared distances are sorted before the log-sum-exp so the result
        // is bit-identical under any permutation of the fit rows.
        let mut sq = Vec::with_capacity(self.points.n_rows());
        for row in self.points.rows() {
            let mut s = 0.0;
            for (a, b) in row.iter().zip(x.iter()) {
                let diff = a - b;
                s += diff * diff;
            }
            sq.push(s);
        }
        sq.sort_by(|a, b| a.partial_cmp(b).expect("distances are finite"));
        let min_sq = sq[0];
        let mut acc = 0.0;
        for &s in sq.iter().rev() {
            acc += (-(s - min_sq) * inv_two_h2).exp();
        }
        let norm = -n.ln() - 0.5 * d * (LN_2PI + 2.0 * self.bandwidth.ln());
        Ok(norm - min_sq * inv_two_h2 + acc.ln())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::density_grid_integral;
    use crate::numcore::SeededRng;
    use proptest::prelude::*;

    fn matrix(rows: &[&[f64]]) -> RealMatrix {
        RealMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn single_point_at_origin_matches_standard_normal() {
        let kde = KdeModel::fit(&matrix(&[&[0.0]]), Some(1.0)).unwrap();
        // -0.5*ln(2*pi) = -0.91893...
        let got = kde.log_density(&[0.0]).unwrap();
        assert!((got - (-0.918_938_533_204_672_7)).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn two_point_fit_averages_kernels() {
        let kde = KdeModel::fit(&matrix(&[&[-1.0], &[1.0]]), Some(1.0)).unwrap();
        // Both kernels contribute phi(1): log phi(1) = -0.5*ln(2*pi) - 0.5.
        let want = -0.918_938_533_204_672_7 - 0.5;
        let got = kde.log_density(&[0.0]).unwrap();
        assert!((got - want).abs() < 1e-12, "got {got}, want {want}");
    }

    #[test]
    fn scott_rule_pins() {
        // 32^(-1/5) is exactly 0.5 in the exp/ln formulation.
        assert_eq!(scott_bandwidth(32, 1), 0.5);
        let coarse = scott_bandwidth(20_640, 8);
        assert!((coarse - 0.436_9).abs() < 5e-4, "got {coarse}");
    }

    #[test]
    fn default_bandwidth_is_scott() {
        let mut rng = SeededRng::new(7);
        let rows: Vec<Vec<f64>> = (0..32).map(|_| vec![rng.normal()]).collect();
        let kde = KdeModel::fit(&RealMatrix::from_rows(&rows).unwrap(), None).unwrap();
        assert_eq!(kde.bandwidth(), 0.5);
    }

    #[test]
    fn integrates_to_one_in_two_dimensions() {
        let mut rng = SeededRng::new(11);
        let rows: Vec<Vec<f64>> = (0..60).map(|_| vec![rng.normal(), rng.normal()]).collect();
        let kde = KdeModel::fit(&RealMatrix::from_rows(&rows).unwrap(), None).unwrap();
        let integral =
            density_grid_integral(&kde, &[-8.0, -8.0], &[8.0, 8.0], 220).unwrap();
        assert!((integral - 1.0).abs() < 0.01, "integral {integral}");
    }

    #[test]
    fn rejects_bad_bandwidth_and_empty_fit() {
        assert!(KdeModel::fit(&matrix(&[&[0.0]]), Some(0.0)).is_err());
        assert!(KdeModel::fit(&matrix(&[&[0.0]]), Some(-1.0)).is_err());
        assert!(KdeModel::fit(&matrix(&[&[0.0]]), Some(f64::NAN)).is_err());
        let empty = RealMatrix::zeros(0, 1);
        assert!(KdeModel::fit(&empty, None).is_err());
    }

    #[test]
    fn finite_far_from_the_fit_set() {
        let kde = KdeModel::fit(&matrix(&[&[0.0, 0.0], &[1.0, 1.0]]), Some(0.3)).unwrap();
        let lp = kde.log_density(&[100.0, -100.0]).unwrap();
        assert!(lp.is_finite(), "got {lp}");
    }

    #[test]
    fn save_load_round_trips_log_density() {
        let mut rng = SeededRng::new(3);
        let rows: Vec<Vec<f64>> = (0..25).map(|_| vec![rng.normal(), rng.normal()]).collect();
        let kde = KdeModel::fit(&RealMatrix::from_rows(&rows).unwrap(), None).unwrap();
        let back = KdeModel::from_json(&kde.to_json()).unwrap();
        let x = [0.37, -1.2];
        assert_eq!(kde.log_density(&x).unwrap(), back.log_density(&x).unwrap());
        assert_eq!(kde.bandwidth(), back.bandwidth());
    }

    proptest! {
        // Permuting the fit rows changes nothing, bit for bit.
        #[test]
        fn exchangeable_over_fit_order(seed in 0u64..1000, n in 2usize..12) {
            let mut rng = SeededRng::new(seed);
            let rows: Vec<Vec<f64>> =
                (0..n).map(|_| vec![rng.normal(), rng.normal()]).collect();
            let base = RealMatrix::from_rows(&rows).unwrap();
            let perm = rng.permutation(n);
            let shuffled = base.select_rows(&perm).unwrap();
            let a = KdeModel::fit(&base, Some(0.7)).unwrap();
            let b = KdeModel::fit(&shuffled, Some(0.7)).unwrap();
            let x = [rng.normal(), rng.normal()];
            prop_assert_eq!(
                a.log_density(&x).unwrap().to_bits(),
                b.log_density(&x).unwrap().to_bits()
            );
        }

        // Adding a far-away fit point can only lower the density at the
        // query (it dilutes the mixture), never produce non-finite output.
        #[test]
        fn dilution_lowers_density(shift in 5.0f64..50.0) {
            let near = matrix(&[&[0.0], &[0.5]]);
            let far = matrix(&[&[0.0], &[0.5], &[shift]]);
            let a = KdeModel::fit(&near, Some(1.0)).unwrap();
            let b = KdeModel::fit(&far, Some(1.0)).unwrap();
            let la = a.log_density(&[0.2]).unwrap();
            let lb = b.log_density(&[0.2]).unwrap();
            prop_assert!(lb.is_finite());
            prop_assert!(lb < la);
        }
    }
}
