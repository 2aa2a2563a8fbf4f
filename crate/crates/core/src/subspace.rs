use nalgebra::{DMatrix, DVector};

use crate::linalg::{self, RankTolerance};

/// A linear subspace of R^n stored as an orthonormal column basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
    tol: RankTolerance,
}

impl Subspace {
    pub fn zero(ambient_dim: usize, tol: RankTolerance) -> Self {
        Self {
            basis: DMatrix::zeros(ambient_dim, 0),
            tol,
        }
    }

    pub fn full(ambient_dim: usize, tol: RankTolerance) -> Self {
        Self {
            basis: DMatrix::identity(ambient_dim, ambient_dim),
            tol,
        }
    }

    /// Column space of `spanning`, orthonormalized by SVD.
    pub fn span_of(spanning: &DMatrix<f64>, tol: RankTolerance) -> Self {
        Self {
            basis: linalg::orthonormal_range(spanning, tol),
            tol,
        }
    }

    /// Wraps a basis that is already orthonormal.
    pub(crate) fn from_orthonormal(basis: DMatrix<f64>, tol: RankTolerance) -> Self {
        Self { basis, tol }
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn tolerance(&self) -> RankTolerance {
        self.tol
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn is_full(&self) -> bool {
        self.dim() == self.ambient_dim()
    }

    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }

    /// `(I - P) m` for the orthogonal projector `P` onto this subspace.
    pub fn residual(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        if self.dim() == 0 {
            return m.clone();
        }
        m - &self.basis * (self.basis.transpose() * m)
    }

    pub fn contains(&self, v: &DVector<f64>) -> bool {
        let m = DMatrix::from_column_slice(v.len(), 1, v.as_slice());
        let r = self.residual(&m).norm();
        r <= self.tol.threshold(v.norm(), self.ambient_dim())
    }

    /// Span of this subspace together with the columns of `extra`.
    ///
    /// Re-orthonormalizes through an SVD of `[basis, extra]`.
    pub fn extended(&self, extra: &DMatrix<f64>) -> Self {
        if extra.ncols() == 0 {
            return self.clone();
        }
        let stacked = linalg::hstack(&[self.basis.clone(), extra.clone()], self.ambient_dim());
        Self::span_of(&stacked, self.tol)
    }

    pub fn complement(&self) -> Self {
        Self {
            basis: linalg::orthogonal_complement(&self.basis, self.ambient_dim()),
            tol: self.tol,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extension_is_orthonormal() {
        let tol = RankTolerance::default();
        let s = Subspace::span_of(&DMatrix::from_row_slice(3, 1, &[1.0, 1.0, 0.0]), tol);
        let s2 = s.extended(&DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 0.0, 2.0, 0.0, 0.0]));
        assert_eq!(s2.dim(), 2);
        let g = s2.basis().transpose() * s2.basis();
        assert!((g - DMatrix::identity(2, 2)).norm() < 1e-12);
        assert!(s2.contains(&DVector::from_vec(vec![3.0, -1.0, 0.0])));
        assert!(!s2.contains(&DVector::from_vec(vec![0.0, 0.0, 1.0])));
    }

    #[test]
    fn complement_of_zero_is_full() {
        let s = Subspace::zero(4, RankTolerance::default());
        assert!(s.complement().is_full());
    }
}
