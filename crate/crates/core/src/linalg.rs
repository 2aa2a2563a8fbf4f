//! Dense linear-algebra helpers shared by the analysis modules.
//!
//! Numerical rank follows the usual convention: a singular value counts as
//! zero when it falls below `max(dims) * eps * sigma_max`, never below an
//! absolute floor.

use nalgebra::{Cholesky, DMatrix, Dyn, SymmetricEigen, SVD};

use crate::error::{Error, Result};

/// Absolute floor used when no override is given.
pub const DEFAULT_RANK_FLOOR: f64 = 1e-9;

/// Threshold policy for numerical rank and null-space decisions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankTolerance {
    pub floor: f64,
}

impl Default for RankTolerance {
    fn default() -> Self {
        Self {
            floor: DEFAULT_RANK_FLOOR,
        }
    }
}

impl RankTolerance {
    pub fn with_floor(floor: f64) -> Self {
        Self { floor }
    }

    /// Cut-off below which a singular value (or PSD eigenvalue) is zero.
    pub fn threshold(&self, sigma_max: f64, dims: usize) -> f64 {
        (dims.max(1) as f64 * f64::EPSILON * sigma_max).max(self.floor)
    }
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(symmetrize(m)).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    symmetric_eigenvalues(m)[0]
}

pub fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    *symmetric_eigenvalues(m).last().unwrap()
}

pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

pub fn cholesky(m: &DMatrix<f64>, what: &'static str) -> Result<Cholesky<f64, Dyn>> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NotPositiveDefinite(what));
    }
    Cholesky::new(symmetrize(m)).ok_or(Error::NotPositiveDefinite(what))
}

/// `log det` of a symmetric positive-definite matrix via its Cholesky factor.
pub fn log_det_spd(m: &DMatrix<f64>, what: &'static str) -> Result<f64> {
    let chol = cholesky(m, what)?;
    Ok(chol_log_det(&chol))
}

pub fn chol_log_det(chol: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

pub fn inverse_spd(m: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    Ok(symmetrize(&cholesky(m, what)?.inverse()))
}

/// Orthonormal basis (as columns) of the column space of `m`.
pub fn orthonormal_range(m: &DMatrix<f64>, tol: RankTolerance) -> DMatrix<f64> {
    let n = m.nrows();
    if m.ncols() == 0 || n == 0 {
        return DMatrix::zeros(n, 0);
    }
    let svd = SVD::new(m.clone(), true, false);
    let u = svd.u.as_ref().expect("requested U");
    let sigma_max = svd.singular_values.max();
    let cut = tol.threshold(sigma_max, n.max(m.ncols()));
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > cut)
        .collect();
    DMatrix::from_fn(n, keep.len(), |r, c| u[(r, keep[c])])
}

pub fn numerical_rank(m: &DMatrix<f64>, tol: RankTolerance) -> usize {
    orthonormal_range(m, tol).ncols()
}

/// Orthonormal basis of the kernel of a symmetric positive-semidefinite matrix.
pub fn psd_null_space(w: &DMatrix<f64>, tol: RankTolerance) -> DMatrix<f64> {
    let n = w.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let eig = SymmetricEigen::new(symmetrize(w));
    let lam_max = eig.eigenvalues.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    let cut = tol.threshold(lam_max, n);
    let keep: Vec<usize> = (0..n).filter(|&k| eig.eigenvalues[k] <= cut).collect();
    let basis = DMatrix::from_fn(n, keep.len(), |r, c| eig.eigenvectors[(r, keep[c])]);
    // A clean re-orthonormalization keeps the basis exact when eigenvalues cluster.
    orthonormal_range(&basis, RankTolerance::with_floor(0.5))
}

/// Orthonormal basis of the orthogonal complement of span(`basis`) in R^n.
pub fn orthogonal_complement(basis: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    if basis.ncols() == 0 {
        return DMatrix::identity(n, n);
    }
    let projector = basis * basis.transpose();
    let residual = DMatrix::<f64>::identity(n, n) - projector;
    orthonormal_range(&residual, RankTolerance::with_floor(0.5))
}

/// Horizontally concatenates blocks with equal row counts.
pub fn hstack(blocks: &[DMatrix<f64>], nrows: usize) -> DMatrix<f64> {
    let ncols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(nrows, ncols);
    let mut c = 0;
    for b in blocks {
        debug_assert_eq!(b.nrows(), nrows);
        out.view_mut((0, c), (nrows, b.ncols())).copy_from(b);
        c += b.ncols();
    }
    out
}

/// Block-diagonal assembly.
pub fn block_diagonal(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_of_rank_one() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 0.0, 0.0]);
        let b = orthonormal_range(&m, RankTolerance::default());
        assert_eq!(b.ncols(), 1);
        assert!(((b.transpose() * &b)[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn null_space_of_identity_and_zero() {
        let tol = RankTolerance::default();
        assert_eq!(psd_null_space(&DMatrix::identity(4, 4), tol).ncols(), 0);
        assert_eq!(psd_null_space(&DMatrix::zeros(4, 4), tol).ncols(), 4);
    }

    #[test]
    fn log_det_matches_product_of_eigenvalues() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let ld = log_det_spd(&m, "m").unwrap();
        assert!((ld - (2.0_f64 - 0.25).ln()).abs() < 1e-14);
    }

    #[test]
    fn complement_dimension() {
        let b = DMatrix::from_row_slice(3, 1, &[1.0, 0.0, 0.0]);
        let c = orthogonal_complement(&b, 3);
        assert_eq!(c.ncols(), 2);
        assert!((b.transpose() * c).norm() < 1e-14);
    }

    #[test]
    fn indefinite_matrix_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(cholesky(&m, "m").is_err());
    }
}
