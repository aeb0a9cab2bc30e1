//! Small helpers over nalgebra for the dense, desk-scale matrices used here.

use nalgebra::{DMatrix, DVector};

/// Relative symmetry defect: max |M - Mᵀ| / max(1, max |M|).
pub fn symmetry_defect(m: &DMatrix<f64>) -> f64 {
    let scale = m.amax().max(1.0);
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst / scale
}

/// Force exact symmetry by averaging with the transpose.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue_sym(m: &DMatrix<f64>) -> f64 {
    let es = symmetrize(m).symmetric_eigen();
    es.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Largest eigenvalue of a symmetric matrix.
pub fn max_eigenvalue_sym(m: &DMatrix<f64>) -> f64 {
    let es = symmetrize(m).symmetric_eigen();
    es.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// Condition number of a symmetric positive definite matrix (eigenvalue ratio).
pub fn spd_condition(m: &DMatrix<f64>) -> f64 {
    let es = symmetrize(m).symmetric_eigen();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &e in es.eigenvalues.iter() {
        lo = lo.min(e);
        hi = hi.max(e);
    }
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
/// Returns None when the factorization fails.
pub fn spd_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    symmetrize(m).cholesky().map(|c| c.inverse())
}

/// log det of a symmetric positive definite matrix via Cholesky.
pub fn spd_log_det(m: &DMatrix<f64>) -> Option<f64> {
    let chol = symmetrize(m).cholesky()?;
    let l = chol.l();
    let mut acc = 0.0;
    for i in 0..l.nrows() {
        if l[(i, i)] <= 0.0 {
            return None;
        }
        acc += l[(i, i)].ln();
    }
    Some(2.0 * acc)
}

/// Quadratic form xᵀ M x.
pub fn quad_form(x: &DVector<f64>, m: &DMatrix<f64>) -> f64 {
    (x.transpose() * m * x)[(0, 0)]
}

pub fn is_finite_matrix(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}
