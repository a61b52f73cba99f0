//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Condition number above which a covariance is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(a.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(a).first().copied().unwrap_or(f64::NAN)
}

/// Eigen-decomposition sorted by descending eigenvalue.
pub fn sym_eigen_desc(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(a.clone());
    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Log-determinant of a symmetric positive definite matrix as a sum of
/// log-eigenvalues. Fails when the matrix is singular or ill conditioned.
pub fn log_det_spd(a: &DMatrix<f64>, what: &str) -> Result<f64> {
    let ev = sym_eigenvalues(a);
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    if !(lo > 0.0) {
        return Err(Error::NotPositiveDefinite(format!(
            "{what}: minimum eigenvalue {lo:e}"
        )));
    }
    if hi / lo > MAX_CONDITION {
        return Err(Error::NotPositiveDefinite(format!(
            "{what}: condition number {:e} exceeds {MAX_CONDITION:e}",
            hi / lo
        )));
    }
    Ok(ev.iter().map(|v| v.ln()).sum())
}

/// `λ_max / λ_min` of a symmetric matrix; infinite unless every eigenvalue is positive.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let ev = sym_eigenvalues(a);
    if !(ev[0] > 0.0) {
        return f64::INFINITY;
    }
    ev[ev.len() - 1] / ev[0]
}

/// Lower Cholesky factor.
pub fn cholesky_lower(a: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    a.clone()
        .cholesky()
        .map(|c| c.l())
        .ok_or_else(|| Error::NotPositiveDefinite(what.to_string()))
}

/// Solves `a x = b` for symmetric positive definite `a`.
pub fn spd_solve(a: &DMatrix<f64>, b: &DVector<f64>, what: &str) -> Result<DVector<f64>> {
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite(what.to_string()))?;
    Ok(chol.solve(b))
}

pub fn spd_inverse(a: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite(what.to_string()))?;
    let inv = chol.inverse();
    Ok((&inv + inv.transpose()) * 0.5)
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Column means of a T×N matrix.
pub fn column_means(x: &DMatrix<f64>) -> DVector<f64> {
    let t = x.nrows() as f64;
    DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / t))
}

/// Unbiased sample covariance of the columns of a T×N matrix.
pub fn sample_covariance(x: &DMatrix<f64>) -> DMatrix<f64> {
    let means = column_means(x);
    let mut centered = x.clone();
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        col.add_scalar_mut(-means[j]);
    }
    let denom = (x.nrows().max(2) - 1) as f64;
    symmetrize(&(centered.transpose() * &centered / denom))
}
