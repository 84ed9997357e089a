//! Tiny symmetric linear algebra for feature-dimension sized problems:
//! Cholesky for covariance sampling, cyclic Jacobi for PCA. Both are O(d^3)
//! with d in the tens at most, so simplicity beats cleverness here.

use crate::error::{AuditError, Result};

/// Lower Cholesky factor of a symmetric positive-definite matrix given in
/// row-major order. A small ridge is the caller's job if the matrix may be
/// singular.
pub fn cholesky(a: &[f64], d: usize) -> Result<Vec<f64>> {
    if a.len() != d * d {
        return Err(AuditError::Dimension(format!(
            "cholesky: expected {}x{} = {} entries, got {}",
            d,
            d,
            d * d,
            a.len()
        )));
    }
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(AuditError::Numeric(format!(
                        "cholesky: non-positive pivot {s} at index {i}"
                    )));
                }
                l[i * d + i] = s.sqrt();
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    Ok(l)
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns (eigenvalues, eigenvectors) sorted by descending eigenvalue;
/// eigenvector k occupies column k of the returned row-major matrix.
pub fn jacobi_eigh(a: &[f64], d: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if a.len() != d * d {
        return Err(AuditError::Dimension(format!(
            "jacobi_eigh: expected {} entries, got {}",
            d * d,
            a.len()
        )));
    }
    let mut m = a.to_vec();
    let mut v = vec![0.0; d * d];
    for i in 0..d {
        v[i * d + i] = 1.0;
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..d {
            for j in (i + 1)..d {
                off += m[i * d + j] * m[i * d + j];
            }
        }
        if off < 1e-22 {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = m[p * d + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = m[p * d + p];
                let aqq = m[q * d + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let mkp = m[k * d + p];
                    let mkq = m[k * d + q];
                    m[k * d + p] = c * mkp - s * mkq;
                    m[k * d + q] = s * mkp + c * mkq;
                }
                for k in 0..d {
                    let mpk = m[p * d + k];
                    let mqk = m[q * d + k];
                    m[p * d + k] = c * mpk - s * mqk;
                    m[q * d + k] = s * mpk + c * mqk;
                }
                for k in 0..d {
                    let vkp = v[k * d + p];
                    let vkq = v[k * d + q];
                    v[k * d + p] = c * vkp - s * vkq;
                    v[k * d + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..d).collect();
    let evals: Vec<f64> = (0..d).map(|i| m[i * d + i]).collect();
    order.sort_by(|&i, &j| evals[j].partial_cmp(&evals[i]).unwrap());
    let sorted_vals: Vec<f64> = order.iter().map(|&i| evals[i]).collect();
    let mut sorted_vecs = vec![0.0; d * d];
    for (new_col, &old_col) in order.iter().enumerate() {
        for k in 0..d {
            sorted_vecs[k * d + new_col] = v[k * d + old_col];
        }
    }
    Ok((sorted_vals, sorted_vecs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_of_known_matrix() {
        // [[4, 2], [2, 3]] = L L^T with L = [[2, 0], [1, sqrt(2)]]
        let l = cholesky(&[4.0, 2.0, 2.0, 3.0], 2).unwrap();
        assert!((l[0] - 2.0).abs() < 1e-12);
        assert!((l[2] - 1.0).abs() < 1e-12);
        assert!((l[3] - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        assert!(cholesky(&[1.0, 2.0, 2.0, 1.0], 2).is_err());
    }

    #[test]
    fn jacobi_recovers_known_spectrum() {
        // [[2, 1], [1, 2]] has eigenvalues 3 and 1.
        let (vals, vecs) = jacobi_eigh(&[2.0, 1.0, 1.0, 2.0], 2).unwrap();
        assert!((vals[0] - 3.0).abs() < 1e-10);
        assert!((vals[1] - 1.0).abs() < 1e-10);
        // Leading eigenvector proportional to (1, 1).
        let ratio = vecs[0] / vecs[2];
        assert!((ratio - 1.0).abs() < 1e-8);
    }

    #[test]
    fn jacobi_reconstructs_matrix() {
        let a = [3.0, 1.0, 0.5, 1.0, 2.0, 0.2, 0.5, 0.2, 1.5];
        let (vals, vecs) = jacobi_eigh(&a, 3).unwrap();
        // A = V diag(vals) V^T
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += vecs[i * 3 + k] * vals[k] * vecs[j * 3 + k];
                }
                assert!((s - a[i * 3 + j]).abs() < 1e-9, "entry {i},{j}: {s}");
            }
        }
    }
}
