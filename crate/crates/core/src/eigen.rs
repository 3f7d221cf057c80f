//! Symmetric eigendecomposition and the spectral helpers built on it.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Default cutoff, relative to the largest eigenvalue, below which an
/// eigenvalue counts as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

const SYMMETRY_TOL: f64 = 1e-8;

/// Eigenvalues in ascending order with matching orthonormal eigenvectors
/// (column `i` belongs to `values[i]`).
#[derive(Debug, Clone)]
pub struct SpectralPair {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SpectralPair {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `V diag(values) V^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        scaled_outer(&self.vectors, self.values.as_slice())
    }

    /// Number of eigenvalues at or below `rank_tol * max(|values|)`.
    pub fn null_count(&self, rank_tol: f64) -> usize {
        let cutoff = rank_tol * self.scale();
        self.values.iter().filter(|v| v.abs() <= cutoff).count()
    }

    fn scale(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// `V diag(d) V^T` for a `p x q` matrix `V` and `d` of length `q`.
pub fn scaled_outer(v: &DMatrix<f64>, d: &[f64]) -> DMatrix<f64> {
    let mut scaled = v.clone();
    for (mut col, s) in scaled.column_iter_mut().zip(d) {
        col *= *s;
    }
    scaled * v.transpose()
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::structure(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::structure(format!(
                    "matrix is not symmetric at ({i}, {j}): {} vs {}",
                    m[(i, j)],
                    m[(j, i)]
                )));
            }
        }
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    Ok(())
}

/// Eigendecomposition of a symmetric matrix, ascending order.
///
/// Each eigenvector is oriented so that its largest-magnitude component is
/// non-negative, which makes results reproducible across calls.
pub fn sym_eigen(m: &DMatrix<f64>) -> Result<SpectralPair> {
    check_symmetric(m)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(SpectralPair {
            values: DVector::zeros(0),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    // Work on the exactly symmetrised matrix so tiny asymmetries cannot leak.
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 10_000).ok_or_else(|| {
        let fro = m.norm();
        let diag_max = m.diagonal().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        Error::Numerical(format!(
            "symmetric eigensolver did not converge (n = {n}, |M|_F = {fro:e}, max |diag| = {diag_max:e})"
        ))
    })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let pivot = col.iter().fold(0.0f64, |best, v| {
            if v.abs() > best.abs() {
                *v
            } else {
                best
            }
        });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        vectors.set_column(dst, &(col * sign));
    }
    Ok(SpectralPair { values, vectors })
}

/// Generalized determinant: product of the eigenvalues above
/// `rank_tol * max eigenvalue`, accumulated in the log domain.
pub fn gdet(m: &DMatrix<f64>, rank_tol: f64) -> Result<f64> {
    Ok(log_gdet(m, rank_tol)?.exp())
}

pub fn log_gdet(m: &DMatrix<f64>, rank_tol: f64) -> Result<f64> {
    let eig = sym_eigen(m)?;
    let max = eig.values.iter().fold(0.0f64, |a, v| a.max(*v));
    let cutoff = rank_tol * max;
    Ok(eig
        .values
        .iter()
        .filter(|v| **v > cutoff)
        .map(|v| v.ln())
        .sum())
}

/// Moore-Penrose pseudo-inverse of a symmetric PSD matrix by spectral
/// inversion of the eigenvalues above `rank_tol * max eigenvalue`.
pub fn pinv(m: &DMatrix<f64>, rank_tol: f64) -> Result<DMatrix<f64>> {
    let eig = sym_eigen(m)?;
    Ok(pinv_from(&eig, rank_tol))
}

pub fn pinv_from(eig: &SpectralPair, rank_tol: f64) -> DMatrix<f64> {
    let max = eig.values.iter().fold(0.0f64, |a, v| a.max(*v));
    let cutoff = rank_tol * max;
    let inv: Vec<f64> = eig
        .values
        .iter()
        .map(|v| if *v > cutoff { 1.0 / v } else { 0.0 })
        .collect();
    scaled_outer(&eig.vectors, &inv)
}
