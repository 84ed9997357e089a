//! Distance-to-synthetic attacks: a radius count, a nearest-neighbor
//! score, and its reference-calibrated variant. All of them read the
//! geometry of the released rows directly instead of fitting a density.

use crate::error::{AuditError, Result};
use crate::numcore::{jacobi_eigh, RealMatrix, SeededRng};

/// Settings for the radius-count attack.
///
/// `epsilon = None` picks the radius from the data: the median
/// nearest-neighbor distance within the synthetic set, so roughly half the
/// synthetic rows have a neighbor inside it. `pca_components` optionally
/// projects everything onto the leading principal axes of the synthetic
/// set before measuring distances.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RadiusConfig {
    pub epsilon: Option<f64>,
    pub pca_components: Option<usize>,
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        let d = x - y;
        s += d * d;
    }
    s.sqrt()
}

fn min_distance(x: &[f64], rows: &RealMatrix) -> f64 {
    let mut best = f64::INFINITY;
    for r in rows.rows() {
        let d = euclidean(x, r);
        if d < best {
            best = d;
        }
    }
    best
}

/// Median with the even case averaged, matching the threshold convention
/// used by the metrics module.
fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Project rows onto the top `k` principal axes of `fit`.
fn pca_project(fit: &RealMatrix, others: &[&RealMatrix], k: usize) -> Result<Vec<RealMatrix>> {
    let d = fit.n_cols();
    if k == 0 || k > d {
        return Err(AuditError::Parameter(format!(
            "pca components {k} out of range for {d}-column data"
        )));
    }
    if fit.n_rows() < 2 {
        return Err(AuditError::Size("PCA needs at least two fit rows".into()));
    }
    let means = fit.col_means();
    let n = fit.n_rows() as f64;
    let mut cov = vec![0.0; d * d];
    for row in fit.rows() {
        for i in 0..d {
            let ci = row[i] - means[i];
            for j in 0..d {
                cov[i * d + j] += ci * (row[j] - means[j]);
            }
        }
    }
    for v in cov.iter_mut() {
        *v /= n;
    }
    let (_, vecs) = jacobi_eigh(&cov, d)?;
    let mut projected = Vec::with_capacity(others.len());
    for m in others {
        if m.n_cols() != d {
            return Err(AuditError::Dimension(format!(
                "PCA fit on {d} columns, projecting {}",
                m.n_cols()
            )));
        }
        let mut out = Vec::with_capacity(m.n_rows() * k);
        for row in m.rows() {
            for c in 0..k {
                let mut s = 0.0;
                for i in 0..d {
                    s += (row[i] - means[i]) * vecs[i * d + c];
                }
                out.push(s);
            }
        }
        projected.push(RealMatrix::from_vec(m.n_rows(), k, out)?);
    }
    Ok(projected)
}

/// Nearest-neighbor distance of each synthetic row to the rest of the set.
fn synthetic_nn_distances(d_syn: &RealMatrix) -> Vec<f64> {
    let n = d_syn.n_rows();
    let mut dists = vec![f64::INFINITY; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = euclidean(d_syn.row(i), d_syn.row(j));
            if d < dists[i] {
                dists[i] = d;
            }
            if d < dists[j] {
                dists[j] = d;
            }
        }
    }
    dists
}

/// Radius count: score(x) = fraction of synthetic rows strictly within
/// epsilon. Returns the scores and the epsilon actually used, so a
/// data-derived default can be recorded in run metadata.
pub fn radius_count_scores(
    d_syn: &RealMatrix,
    d_test: &RealMatrix,
    cfg: &RadiusConfig,
) -> Result<(Vec<f64>, f64)> {
    if d_syn.n_rows() < 2 {
        return Err(AuditError::Size("radius count needs at least two synthetic rows".into()));
    }
    if d_syn.n_cols() != d_test.n_cols() {
        return Err(AuditError::Dimension(format!(
            "synthetic has {} columns, test has {}",
            d_syn.n_cols(),
            d_test.n_cols()
        )));
    }
    let (syn, test) = match cfg.pca_components {
        Some(k) => {
            let mut proj = pca_project(d_syn, &[d_syn, d_test], k)?;
            let test = proj.pop().unwrap();
            (proj.pop().unwrap(), test)
        }
        None => (d_syn.clone(), d_test.clone()),
    };
    let epsilon = match cfg.epsilon {
        Some(e) => {
            if !e.is_finite() || e <= 0.0 {
                return Err(AuditError::Parameter(format!("epsilon must be positive, got {e}")));
            }
            e
        }
        None => {
            let mut nn = synthetic_nn_distances(&syn);
            let m = median(&mut nn);
            if m.is_nan() || m <= 0.0 {
                return Err(AuditError::Numeric(
                    "median synthetic nearest-neighbor distance is zero; pass epsilon explicitly"
                        .into(),
                ));
            }
            m
        }
    };
    let n_syn = syn.n_rows() as f64;
    let scores = test
        .rows()
        .map(|x| {
            let hits = syn.rows().filter(|s| euclidean(x, s) < epsilon).count();
            hits as f64 / n_syn
        })
        .collect();
    Ok((scores, epsilon))
}

/// Optional subsampling shared by the nearest-neighbor attacks.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NearestConfig {
    /// Compare against only `k` rows drawn without replacement, when set
    /// and smaller than the available set.
    pub subsample: Option<usize>,
}

fn maybe_subsample(
    rows: &RealMatrix,
    k: Option<usize>,
    rng: &mut SeededRng,
) -> Result<RealMatrix> {
    match k {
        Some(k) if k == 0 || k > rows.n_rows() => Err(AuditError::Parameter(format!(
            "subsample k = {k} outside 1..={}",
            rows.n_rows()
        ))),
        Some(k) if k < rows.n_rows() => {
            let idx = rng.choose_without_replacement(rows.n_rows(), k);
            rows.select_rows(&idx)
        }
        _ => Ok(rows.clone()),
    }
}

/// Negated distance to the nearest synthetic row: closer means more
/// member-like.
pub fn nearest_syn_scores(
    d_syn: &RealMatrix,
    d_test: &RealMatrix,
    cfg: &NearestConfig,
    rng: &mut SeededRng,
) -> Result<Vec<f64>> {
    if d_syn.n_rows() == 0 {
        return Err(AuditError::Size("no synthetic rows".into()));
    }
    if d_syn.n_cols() != d_test.n_cols() {
        return Err(AuditError::Dimension(format!(
            "synthetic has {} columns, test has {}",
            d_syn.n_cols(),
            d_test.n_cols()
        )));
    }
    let syn = maybe_subsample(d_syn, cfg.subsample, rng)?;
    Ok(d_test.rows().map(|x| -min_distance(x, &syn)).collect())
}

/// Calibrated nearest neighbor: distance to a reference-synthetic sample
/// minus distance to the audited synthetic set. Positive when a point sits
/// closer to the audited rows than a generator trained on population data
/// would predict. `ref_syn` is used whole (it is already sized by the
/// caller); the subsample setting applies to `d_syn` only.
pub fn calibrated_nearest_scores(
    d_syn: &RealMatrix,
    ref_syn: &RealMatrix,
    d_test: &RealMatrix,
    cfg: &NearestConfig,
    rng: &mut SeededRng,
) -> Result<Vec<f64>> {
    if d_syn.n_rows() == 0 || ref_syn.n_rows() == 0 {
        return Err(AuditError::Size(
            "calibration needs synthetic and reference-synthetic rows".into(),
        ));
    }
    if d_syn.n_cols() != d_test.n_cols() || ref_syn.n_cols() != d_test.n_cols() {
        return Err(AuditError::Dimension(
            "synthetic, reference-synthetic and test column counts differ".into(),
        ));
    }
    let syn = maybe_subsample(d_syn, cfg.subsample, rng)?;
    Ok(d_test
        .rows()
        .map(|x| min_distance(x, ref_syn) - min_distance(x, &syn))
        .collect())
}
