//! Dense row-major matrix of finite f64. Construction and every public
//! operation reject NaN/inf, so downstream code can take finiteness for
//! granted.

use crate::error::{AuditError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        RealMatrix {
            n_rows,
            n_cols,
            data: vec![0.0; n_rows * n_cols],
        }
    }

    pub fn from_vec(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(AuditError::Dimension(format!(
                "expected {} values for a {}x{} matrix, got {}",
                n_rows * n_cols,
                n_rows,
                n_cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(AuditError::Data(format!(
                "non-finite value {} at row {}, column {}",
                data[pos],
                pos / n_cols,
                pos % n_cols
            )));
        }
        Ok(RealMatrix { n_rows, n_cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(AuditError::Data("matrix with zero rows".into()));
        }
        let n_cols = rows[0].len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n_cols {
                return Err(AuditError::Dimension(format!(
                    "row {} has {} values, expected {}",
                    i,
                    r.len(),
                    n_cols
                )));
            }
        }
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        RealMatrix::from_vec(rows.len(), n_cols, data)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.n_rows && j < self.n_cols);
        self.data[i * self.n_cols + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        debug_assert!(i < self.n_rows);
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_cols)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, j)).collect()
    }

    /// New matrix from the given row indices, in order. Indices may repeat.
    pub fn select_rows(&self, idx: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(idx.len() * self.n_cols);
        for &i in idx {
            if i >= self.n_rows {
                return Err(AuditError::Size(format!(
                    "row index {} out of range for {} rows",
                    i, self.n_rows
                )));
            }
            data.extend_from_slice(self.row(i));
        }
        Ok(RealMatrix {
            n_rows: idx.len(),
            n_cols: self.n_cols,
            data,
        })
    }

    /// New matrix keeping the listed columns, in order.
    pub fn select_cols(&self, cols: &[usize]) -> Result<Self> {
        for &j in cols {
            if j >= self.n_cols {
                return Err(AuditError::Size(format!(
                    "column index {} out of range for {} columns",
                    j, self.n_cols
                )));
            }
        }
        let mut data = Vec::with_capacity(self.n_rows * cols.len());
        for i in 0..self.n_rows {
            for &j in cols {
                data.push(self.get(i, j));
            }
        }
        Ok(RealMatrix {
            n_rows: self.n_rows,
            n_cols: cols.len(),
            data,
        })
    }

    pub fn vstack(&self, other: &RealMatrix) -> Result<Self> {
        if self.n_cols != other.n_cols {
            return Err(AuditError::Dimension(format!(
                "cannot stack {} columns on {} columns",
                other.n_cols, self.n_cols
            )));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(RealMatrix {
            n_rows: self.n_rows + other.n_rows,
            n_cols: self.n_cols,
            data,
        })
    }

    /// Apply an elementwise map; the result is re-checked for finiteness.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let data: Vec<f64> = self.data.iter().map(|&v| f(v)).collect();
        RealMatrix::from_vec(self.n_rows, self.n_cols, data)
    }

    pub fn col_means(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n_cols];
        for row in self.rows() {
            for (j, v) in row.iter().enumerate() {
                m[j] += v;
            }
        }
        let n = self.n_rows as f64;
        m.iter_mut().for_each(|v| *v /= n);
        m
    }

    /// Population standard deviation per column (divide by n, not n-1).
    pub fn col_stds(&self) -> Vec<f64> {
        let means = self.col_means();
        let mut s = vec![0.0; self.n_cols];
        for row in self.rows() {
            for (j, v) in row.iter().enumerate() {
                let d = v - means[j];
                s[j] += d * d;
            }
        }
        let n = self.n_rows as f64;
        s.iter_mut().for_each(|v| *v = (*v / n).sqrt());
        s
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        assert!(RealMatrix::from_vec(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(RealMatrix::from_vec(1, 2, vec![f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn rejects_ragged_rows() {
        let rows = vec![vec![1.0, 2.0], vec![3.0]];
        assert!(RealMatrix::from_rows(&rows).is_err());
    }

    #[test]
    fn select_and_stack() {
        let m = RealMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        let s = m.select_rows(&[2, 0]).unwrap();
        assert_eq!(s.row(0), &[5.0, 6.0]);
        assert_eq!(s.row(1), &[1.0, 2.0]);
        let c = m.select_cols(&[1]).unwrap();
        assert_eq!(c.column(0), vec![2.0, 4.0, 6.0]);
        let v = s.vstack(&c.select_rows(&[0]).unwrap());
        assert!(v.is_err()); // 2 cols vs 1 col
    }

    #[test]
    fn population_std() {
        // {0, 2}: mean 1, population std exactly 1.
        let m = RealMatrix::from_rows(&[vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(m.col_means(), vec![1.0]);
        assert_eq!(m.col_stds(), vec![1.0]);
    }
}
