//! Small dense/sparse helpers shared by the estimators.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative eigenvalue cutoff used for numerical rank and PSD checks.
pub const RANK_TOL: f64 = 1e-10;

/// Numerical rank of a symmetric matrix: eigenvalues above `RANK_TOL · λ_max`.
pub fn numerical_rank(sym: &DMatrix<f64>) -> usize {
    if sym.is_empty() {
        return 0;
    }
    let eig = SymmetricEigen::new(sym.clone());
    let max = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return 0;
    }
    eig.eigenvalues.iter().filter(|&&v| v > RANK_TOL * max).count()
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    let scale = m.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    (0..m.nrows()).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tol * scale))
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn eigen_range(sym: &DMatrix<f64>) -> (f64, f64) {
    let eig = SymmetricEigen::new(sym.clone());
    let lo = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

pub fn check_psd(sym: &DMatrix<f64>, what: &str) -> Result<()> {
    if !is_symmetric(sym, 1e-12) {
        return Err(Error::InvalidParameter(format!("{what} is not symmetric")));
    }
    if sym.is_empty() {
        return Ok(());
    }
    let (lo, hi) = eigen_range(sym);
    if lo < -RANK_TOL * hi.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidParameter(format!(
            "{what} is not positive semidefinite (smallest eigenvalue {lo:e})"
        )));
    }
    Ok(())
}

/// Compressed row storage for design matrices with local support.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRows {
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseRows {
    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut indptr = Vec::with_capacity(m.nrows() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v != 0.0 {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            ncols: m.ncols(),
            indptr,
            indices,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn density(&self) -> f64 {
        let cells = self.nrows() * self.ncols;
        if cells == 0 {
            0.0
        } else {
            self.values.len() as f64 / cells as f64
        }
    }

    fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()].iter().cloned().zip(self.values[span].iter().cloned())
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for &i in rows {
            let span = self.indptr[i]..self.indptr[i + 1];
            indices.extend_from_slice(&self.indices[span.clone()]);
            values.extend_from_slice(&self.values[span]);
            indptr.push(indices.len());
        }
        Self {
            ncols: self.ncols,
            indptr,
            indices,
            values,
        }
    }

    /// `Bᵀ diag(w) B`.
    pub fn weighted_gram(&self, w: &[f64]) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.ncols, self.ncols);
        for i in 0..self.nrows() {
            let wi = w[i];
            if wi == 0.0 {
                continue;
            }
            for (a, va) in self.row(i) {
                let s = wi * va;
                for (b, vb) in self.row(i) {
                    if b >= a {
                        g[(a, b)] += s * vb;
                    }
                }
            }
        }
        for a in 0..self.ncols {
            for b in 0..a {
                g[(a, b)] = g[(b, a)];
            }
        }
        g
    }

    /// `Bᵀ diag(w) r`.
    pub fn weighted_cross(&self, w: &[f64], r: &[f64]) -> DVector<f64> {
        let mut out = DVector::zeros(self.ncols);
        for i in 0..self.nrows() {
            let s = w[i] * r[i];
            if s == 0.0 {
                continue;
            }
            for (j, v) in self.row(i) {
                out[j] += s * v;
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.nrows(), (0..self.nrows()).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()))
    }
}

/// Dense `Bᵀ diag(w) B`.
pub fn dense_weighted_gram(b: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let p = b.ncols();
    let mut g = DMatrix::zeros(p, p);
    for i in 0..b.nrows() {
        let wi = w[i];
        if wi == 0.0 {
            continue;
        }
        for a in 0..p {
            let s = wi * b[(i, a)];
            if s == 0.0 {
                continue;
            }
            for c in a..p {
                g[(a, c)] += s * b[(i, c)];
            }
        }
    }
    for a in 0..p {
        for c in 0..a {
            g[(a, c)] = g[(c, a)];
        }
    }
    g
}

/// Dense `Bᵀ diag(w) r`.
pub fn dense_weighted_cross(b: &DMatrix<f64>, w: &[f64], r: &[f64]) -> DVector<f64> {
    let mut out = DVector::zeros(b.ncols());
    for i in 0..b.nrows() {
        let s = w[i] * r[i];
        if s == 0.0 {
            continue;
        }
        for j in 0..b.ncols() {
            out[j] += s * b[(i, j)];
        }
    }
    out
}

/// Orthonormal basis (as columns) of the complement of a single vector,
/// from the Householder reflection that maps it onto the first axis.
pub fn complement_basis(v: &DVector<f64>) -> Option<DMatrix<f64>> {
    let p = v.len();
    let norm = v.norm();
    if norm == 0.0 || p < 2 {
        return None;
    }
    let mut u = v / norm;
    let sign = if u[0] >= 0.0 { 1.0 } else { -1.0 };
    u[0] += sign;
    let un = u.norm();
    u /= un;
    let h = DMatrix::identity(p, p) - 2.0 * &u * u.transpose();
    Some(h.columns(1, p - 1).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_matches_dense() {
        let b = DMatrix::from_row_slice(3, 4, &[1.0, 0.0, 2.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.5, 0.0, 0.0, 4.0]);
        let w = [0.2, 0.8, 0.5];
        let r = [1.0, -2.0, 3.0];
        let s = SparseRows::from_dense(&b);
        assert!((s.weighted_gram(&w) - dense_weighted_gram(&b, &w)).norm() < 1e-15);
        let direct = b.transpose() * DMatrix::from_diagonal(&DVector::from_column_slice(&w)) * &b;
        assert!((dense_weighted_gram(&b, &w) - direct).norm() < 1e-14);
        assert!((s.weighted_cross(&w, &r) - dense_weighted_cross(&b, &w, &r)).norm() < 1e-15);
        let x = DVector::from_column_slice(&[1.0, 2.0, 3.0, 4.0]);
        assert!((s.mul_vec(&x) - &b * &x).norm() < 1e-15);
    }

    #[test]
    fn complement_is_orthonormal() {
        let v = DVector::from_column_slice(&[3.0, -1.0, 2.0, 0.5]);
        let z = complement_basis(&v).unwrap();
        assert!((z.transpose() * &z - DMatrix::identity(3, 3)).norm() < 1e-14);
        assert!((z.transpose() * &v).norm() < 1e-14);
    }

    #[test]
    fn rank_of_projector() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(numerical_rank(&m), 1);
        assert!(check_psd(&m, "m").is_ok());
        let bad = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(check_psd(&bad, "bad").is_err());
    }
}
