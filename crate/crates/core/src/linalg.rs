//! Thin wrappers over `faer` for the small dense complex problems used here.

use faer::linalg::solvers::DenseSolveCore;
use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix.
pub type CMat = Mat<Complex64>;

pub fn cmat_from_rows<const N: usize>(rows: &[[Complex64; N]; N]) -> CMat {
    Mat::from_fn(N, N, |i, j| rows[i][j])
}

/// Eigenvalues and right eigenvectors (columns, unit Euclidean norm).
pub fn eig(m: &CMat) -> Result<(Vec<Complex64>, CMat)> {
    let e = m.eigen().map_err(|err| Error::LinearAlgebra(format!("eigendecomposition: {err:?}")))?;
    let values: Vec<Complex64> = e.S().column_vector().iter().copied().collect();
    let mut vectors = e.U().to_owned();
    for j in 0..vectors.ncols() {
        let norm = (0..vectors.nrows()).map(|i| vectors[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            for i in 0..vectors.nrows() {
                vectors[(i, j)] /= norm;
            }
        }
    }
    Ok((values, vectors))
}

/// Thin SVD `m = U diag(s) Vᴴ`, singular values in decreasing order.
pub fn svd(m: &CMat) -> Result<(CMat, Vec<f64>, CMat)> {
    let d = m.thin_svd().map_err(|err| Error::LinearAlgebra(format!("svd: {err:?}")))?;
    let s = d.S().column_vector().iter().map(|x| x.re).collect();
    Ok((d.U().to_owned(), s, d.V().to_owned()))
}

pub fn inverse(m: &CMat) -> CMat {
    m.full_piv_lu().inverse()
}

/// 2-norm condition number.
pub fn condition_number(m: &CMat) -> Result<f64> {
    let (_, s, _) = svd(m)?;
    let smax = s.first().copied().unwrap_or(0.0);
    let smin = s.last().copied().unwrap_or(0.0);
    Ok(if smin == 0.0 { f64::INFINITY } else { smax / smin })
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}
