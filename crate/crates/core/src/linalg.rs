//! Small dense symmetric-matrix helpers shared by the factorization and
//! purification code.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::{Error, Result};

/// Eigenvalues below `-PSD_TOL` make a matrix square root undefined.
pub const PSD_TOL: f64 = 1e-10;

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    SymmetricEigen::new(symmetrize(m)).eigenvalues.min()
}

/// Euclidean projection onto the PSD cone: clamp negative eigenvalues.
pub fn project_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    map_eigenvalues(m, |v| v.max(0.0))
}

/// Principal square root of a (numerically) PSD matrix.
pub fn psd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(symmetrize(m));
    let lowest = eig.eigenvalues.min();
    if lowest < -PSD_TOL {
        return Err(Error::NotPsd(lowest));
    }
    Ok(rebuild(eig, |v| v.max(0.0).sqrt()))
}

fn map_eigenvalues(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    rebuild(SymmetricEigen::new(symmetrize(m)), f)
}

fn rebuild(eig: SymmetricEigen<f64, nalgebra::Dyn>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let SymmetricEigen {
        eigenvectors: q,
        eigenvalues: vals,
    } = eig;
    let mut scaled = q.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= f(vals[j]);
    }
    symmetrize(&(scaled * q.transpose()))
}

/// `tr(A B)` for square matrices of equal size.
pub fn trace_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.transpose().iter()).map(|(x, y)| x * y).sum()
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

pub fn diag_matrix(entries: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(entries))
}
