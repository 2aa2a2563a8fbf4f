//! Matrix Lie groups SO(2), SO(3), SE(2), SE(3) and their finite products.
//!
//! Algebra coordinates put the rotational part first in every factor:
//! `[theta, x, y]` for se(2) and `[omega, v]` for se(3). All conventions are
//! left-invariant, and `adjoint` is expressed in those same coordinates.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, Vector2, Vector3};

use crate::error::{Error, Result};
use crate::linalg::block_diagonal;

/// Bound on `||R^T R - I||_F` accepted for rotation blocks.
pub const ORTHONORMALITY_TOL: f64 = 1e-10;
/// Composition re-projects a rotation onto SO(3) once drift exceeds this.
pub const DRIFT_TOL: f64 = 1e-9;
/// SO(3) logarithm refuses angles closer than this to pi.
pub const SO3_CUT_MARGIN: f64 = 1e-6;
const PLANAR_CUT_MARGIN: f64 = 1e-12;
const SERIES_CUTOFF: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GroupKind {
    SO2,
    SO3,
    SE2,
    SE3,
    Product(Vec<GroupKind>),
}

impl GroupKind {
    /// Dimension of the Lie algebra.
    pub fn dim(&self) -> usize {
        match self {
            GroupKind::SO2 => 1,
            GroupKind::SO3 | GroupKind::SE2 => 3,
            GroupKind::SE3 => 6,
            GroupKind::Product(ks) => ks.iter().map(GroupKind::dim).sum(),
        }
    }

    /// Side length of the matrix representation.
    pub fn matrix_size(&self) -> usize {
        match self {
            GroupKind::SO2 => 2,
            GroupKind::SO3 | GroupKind::SE2 => 3,
            GroupKind::SE3 => 4,
            GroupKind::Product(ks) => ks.iter().map(GroupKind::matrix_size).sum(),
        }
    }

    /// Dimensions of the algebra factors (rotation, then translation) in
    /// coordinate order.
    pub fn factor_dims(&self) -> Vec<usize> {
        match self {
            GroupKind::SO2 => vec![1],
            GroupKind::SO3 => vec![3],
            GroupKind::SE2 => vec![1, 2],
            GroupKind::SE3 => vec![3, 3],
            GroupKind::Product(ks) => ks.iter().flat_map(GroupKind::factor_dims).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroupElement {
    So2 {
        angle: f64,
    },
    So3 {
        rotation: Matrix3<f64>,
    },
    Se2 {
        angle: f64,
        translation: Vector2<f64>,
    },
    Se3 {
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
    },
    Product(Vec<GroupElement>),
}

pub fn skew3(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

fn rot2(angle: f64) -> Matrix2<f64> {
    let (s, c) = angle.sin_cos();
    Matrix2::new(c, -s, s, c)
}

fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

fn check_rotation(r: &Matrix3<f64>) -> Result<()> {
    let drift = (r.transpose() * r - Matrix3::identity()).norm();
    if drift.is_nan() || drift >= ORTHONORMALITY_TOL || r.determinant() <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "not a rotation matrix (||R^T R - I||_F = {drift:e})"
        )));
    }
    Ok(())
}

/// Nearest rotation in Frobenius norm (polar projection).
pub fn orthonormalize(r: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = r.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut d = Matrix3::identity();
    if (u * vt).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    u * d * vt
}

fn renormalize_if_drifted(r: Matrix3<f64>) -> Matrix3<f64> {
    if (r.transpose() * r - Matrix3::identity()).norm() > DRIFT_TOL {
        orthonormalize(&r)
    } else {
        r
    }
}

/// `(sin t / t, (1 - cos t) / t^2, (t - sin t) / t^3)`.
fn rodrigues_coeffs(theta: f64) -> (f64, f64, f64) {
    if theta < SERIES_CUTOFF {
        let t2 = theta * theta;
        (
            1.0 - t2 / 6.0 + t2 * t2 / 120.0,
            0.5 - t2 / 24.0 + t2 * t2 / 720.0,
            1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0,
        )
    } else {
        let (s, c) = theta.sin_cos();
        (
            s / theta,
            (1.0 - c) / (theta * theta),
            (theta - s) / (theta * theta * theta),
        )
    }
}

fn so3_exp(w: &Vector3<f64>) -> Matrix3<f64> {
    let (a, b, _) = rodrigues_coeffs(w.norm());
    let k = skew3(w);
    Matrix3::identity() + k * a + k * k * b
}

/// Left Jacobian of SO(3); maps the linear velocity to the translation of `exp`.
fn so3_left_jacobian(w: &Vector3<f64>) -> Matrix3<f64> {
    let (_, b, c) = rodrigues_coeffs(w.norm());
    let k = skew3(w);
    Matrix3::identity() + k * b + k * k * c
}

fn so3_log(r: &Matrix3<f64>) -> Result<Vector3<f64>> {
    let axis2 = Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]);
    let s = 0.5 * axis2.norm();
    let c = 0.5 * (r.trace() - 1.0);
    let theta = s.atan2(c);
    if PI - theta < SO3_CUT_MARGIN {
        return Err(Error::Singularity { angle: theta });
    }
    let ratio = if s < 1e-300 { 1.0 } else { theta / s };
    Ok(axis2 * (0.5 * ratio))
}

/// `V(theta)` with `exp([theta, rho]) = (R(theta), V rho)` on SE(2).
fn se2_v(theta: f64) -> Matrix2<f64> {
    let (a, b) = if theta.abs() < SERIES_CUTOFF {
        let t2 = theta * theta;
        (
            1.0 - t2 / 6.0 + t2 * t2 / 120.0,
            theta * (0.5 - t2 / 24.0 + t2 * t2 / 720.0),
        )
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / theta)
    };
    Matrix2::new(a, -b, b, a)
}

fn planar_log_angle(angle: f64) -> Result<f64> {
    let a = wrap_angle(angle);
    if PI - a.abs() < PLANAR_CUT_MARGIN {
        return Err(Error::Singularity { angle: a });
    }
    Ok(a)
}

fn check_len(v: &[f64], kind: &GroupKind) -> Result<()> {
    if v.len() != kind.dim() {
        return Err(Error::DimensionMismatch {
            context: "algebra vector",
            expected: kind.dim(),
            actual: v.len(),
        });
    }
    Ok(())
}

fn split_by_factor<'a>(v: &'a [f64], kinds: &[GroupKind]) -> Vec<&'a [f64]> {
    let mut out = Vec::with_capacity(kinds.len());
    let mut off = 0;
    for k in kinds {
        out.push(&v[off..off + k.dim()]);
        off += k.dim();
    }
    out
}

/// Lie algebra matrix of `v`. Products give block-diagonal matrices.
pub fn hat(v: &[f64], kind: &GroupKind) -> Result<DMatrix<f64>> {
    check_len(v, kind)?;
    Ok(match kind {
        GroupKind::SO2 => DMatrix::from_row_slice(2, 2, &[0.0, -v[0], v[0], 0.0]),
        GroupKind::SO3 => {
            let k = skew3(&Vector3::new(v[0], v[1], v[2]));
            DMatrix::from_fn(3, 3, |r, c| k[(r, c)])
        }
        GroupKind::SE2 => DMatrix::from_row_slice(3, 3, &[0.0, -v[0], v[1], v[0], 0.0, v[2], 0.0, 0.0, 0.0]),
        GroupKind::SE3 => {
            let k = skew3(&Vector3::new(v[0], v[1], v[2]));
            let mut m = DMatrix::zeros(4, 4);
            for r in 0..3 {
                for c in 0..3 {
                    m[(r, c)] = k[(r, c)];
                }
                m[(r, 3)] = v[3 + r];
            }
            m
        }
        GroupKind::Product(kinds) => {
            let blocks = split_by_factor(v, kinds)
                .into_iter()
                .zip(kinds)
                .map(|(part, k)| hat(part, k))
                .collect::<Result<Vec<_>>>()?;
            block_diagonal(&blocks)
        }
    })
}

/// Inverse of [`hat`]; reads the generator coordinates from `m`.
pub fn vee(m: &DMatrix<f64>, kind: &GroupKind) -> Result<DVector<f64>> {
    let size = kind.matrix_size();
    if m.nrows() != size || m.ncols() != size {
        return Err(Error::DimensionMismatch {
            context: "algebra matrix",
            expected: size,
            actual: m.nrows(),
        });
    }
    Ok(match kind {
        GroupKind::SO2 => DVector::from_vec(vec![m[(1, 0)]]),
        GroupKind::SO3 => DVector::from_vec(vec![m[(2, 1)], m[(0, 2)], m[(1, 0)]]),
        GroupKind::SE2 => DVector::from_vec(vec![m[(1, 0)], m[(0, 2)], m[(1, 2)]]),
        GroupKind::SE3 => DVector::from_vec(vec![m[(2, 1)], m[(0, 2)], m[(1, 0)], m[(0, 3)], m[(1, 3)], m[(2, 3)]]),
        GroupKind::Product(kinds) => {
            let mut coords = Vec::with_capacity(kind.dim());
            let mut off = 0;
            for k in kinds {
                let s = k.matrix_size();
                let block = m.view((off, off), (s, s)).into_owned();
                coords.extend(vee(&block, k)?.iter());
                off += s;
            }
            DVector::from_vec(coords)
        }
    })
}

pub fn exp_map(v: &[f64], kind: &GroupKind) -> Result<GroupElement> {
    check_len(v, kind)?;
    Ok(match kind {
        GroupKind::SO2 => GroupElement::So2 { angle: v[0] },
        GroupKind::SO3 => GroupElement::So3 {
            rotation: so3_exp(&Vector3::new(v[0], v[1], v[2])),
        },
        GroupKind::SE2 => GroupElement::Se2 {
            angle: v[0],
            translation: se2_v(v[0]) * Vector2::new(v[1], v[2]),
        },
        GroupKind::SE3 => {
            let w = Vector3::new(v[0], v[1], v[2]);
            GroupElement::Se3 {
                rotation: so3_exp(&w),
                translation: so3_left_jacobian(&w) * Vector3::new(v[3], v[4], v[5]),
            }
        }
        GroupKind::Product(kinds) => GroupElement::Product(
            split_by_factor(v, kinds)
                .into_iter()
                .zip(kinds)
                .map(|(part, k)| exp_map(part, k))
                .collect::<Result<_>>()?,
        ),
    })
}

pub fn log_map(g: &GroupElement) -> Result<DVector<f64>> {
    Ok(match g {
        GroupElement::So2 { angle } => DVector::from_vec(vec![planar_log_angle(*angle)?]),
        GroupElement::So3 { rotation } => {
            let w = so3_log(rotation)?;
            DVector::from_column_slice(w.as_slice())
        }
        GroupElement::Se2 { angle, translation } => {
            let theta = planar_log_angle(*angle)?;
            let rho = se2_v(theta)
                .lu()
                .solve(translation)
                .ok_or(Error::Singularity { angle: theta })?;
            DVector::from_vec(vec![theta, rho.x, rho.y])
        }
        GroupElement::Se3 { rotation, translation } => {
            let w = so3_log(rotation)?;
            let rho = so3_left_jacobian(&w)
                .lu()
                .solve(translation)
                .ok_or(Error::Singularity { angle: w.norm() })?;
            DVector::from_vec(vec![w.x, w.y, w.z, rho.x, rho.y, rho.z])
        }
        GroupElement::Product(parts) => {
            let mut coords = Vec::new();
            for p in parts {
                coords.extend(log_map(p)?.iter());
            }
            DVector::from_vec(coords)
        }
    })
}

/// `Ad(g)` in algebra coordinates: for SE(3), `[[R, 0], [p^ R, R]]`.
pub fn adjoint(g: &GroupElement) -> DMatrix<f64> {
    match g {
        GroupElement::So2 { .. } => DMatrix::identity(1, 1),
        GroupElement::So3 { rotation } => DMatrix::from_fn(3, 3, |r, c| rotation[(r, c)]),
        GroupElement::Se2 { angle, translation } => {
            let r = rot2(*angle);
            let mut m = DMatrix::zeros(3, 3);
            m[(0, 0)] = 1.0;
            m[(1, 0)] = translation.y;
            m[(2, 0)] = -translation.x;
            m.view_mut((1, 1), (2, 2)).copy_from(&r);
            m
        }
        GroupElement::Se3 { rotation, translation } => {
            let pr = skew3(translation) * rotation;
            let mut m = DMatrix::zeros(6, 6);
            m.view_mut((0, 0), (3, 3)).copy_from(rotation);
            m.view_mut((3, 3), (3, 3)).copy_from(rotation);
            m.view_mut((3, 0), (3, 3)).copy_from(&pr);
            m
        }
        GroupElement::Product(parts) => block_diagonal(&parts.iter().map(adjoint).collect::<Vec<_>>()),
    }
}

impl GroupElement {
    pub fn identity(kind: &GroupKind) -> Self {
        match kind {
            GroupKind::SO2 => GroupElement::So2 { angle: 0.0 },
            GroupKind::SO3 => GroupElement::So3 {
                rotation: Matrix3::identity(),
            },
            GroupKind::SE2 => GroupElement::Se2 {
                angle: 0.0,
                translation: Vector2::zeros(),
            },
            GroupKind::SE3 => GroupElement::Se3 {
                rotation: Matrix3::identity(),
                translation: Vector3::zeros(),
            },
            GroupKind::Product(ks) => GroupElement::Product(ks.iter().map(Self::identity).collect()),
        }
    }

    pub fn so3(rotation: Matrix3<f64>) -> Result<Self> {
        check_rotation(&rotation)?;
        Ok(GroupElement::So3 { rotation })
    }

    pub fn se3(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        check_rotation(&rotation)?;
        Ok(GroupElement::Se3 { rotation, translation })
    }

    pub fn se2(angle: f64, translation: Vector2<f64>) -> Self {
        GroupElement::Se2 { angle, translation }
    }

    pub fn kind(&self) -> GroupKind {
        match self {
            GroupElement::So2 { .. } => GroupKind::SO2,
            GroupElement::So3 { .. } => GroupKind::SO3,
            GroupElement::Se2 { .. } => GroupKind::SE2,
            GroupElement::Se3 { .. } => GroupKind::SE3,
            GroupElement::Product(ps) => GroupKind::Product(ps.iter().map(Self::kind).collect()),
        }
    }

    /// Rotation block as a dense matrix (factor-wise block diagonal for products).
    pub fn rotation_matrix(&self) -> DMatrix<f64> {
        match self {
            GroupElement::So2 { angle } | GroupElement::Se2 { angle, .. } => {
                let r = rot2(*angle);
                DMatrix::from_fn(2, 2, |i, j| r[(i, j)])
            }
            GroupElement::So3 { rotation } | GroupElement::Se3 { rotation, .. } => {
                DMatrix::from_fn(3, 3, |i, j| rotation[(i, j)])
            }
            GroupElement::Product(ps) => block_diagonal(&ps.iter().map(Self::rotation_matrix).collect::<Vec<_>>()),
        }
    }

    /// Homogeneous matrix representation.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        match self {
            GroupElement::So2 { .. } | GroupElement::So3 { .. } => self.rotation_matrix(),
            GroupElement::Se2 { translation, .. } => {
                let mut m = DMatrix::identity(3, 3);
                m.view_mut((0, 0), (2, 2)).copy_from(&self.rotation_matrix());
                m[(0, 2)] = translation.x;
                m[(1, 2)] = translation.y;
                m
            }
            GroupElement::Se3 { translation, .. } => {
                let mut m = DMatrix::identity(4, 4);
                m.view_mut((0, 0), (3, 3)).copy_from(&self.rotation_matrix());
                for r in 0..3 {
                    m[(r, 3)] = translation[r];
                }
                m
            }
            GroupElement::Product(ps) => block_diagonal(&ps.iter().map(Self::to_matrix).collect::<Vec<_>>()),
        }
    }

    pub fn inverse(&self) -> Self {
        match self {
            GroupElement::So2 { angle } => GroupElement::So2 { angle: -angle },
            GroupElement::So3 { rotation } => GroupElement::So3 {
                rotation: rotation.transpose(),
            },
            GroupElement::Se2 { angle, translation } => GroupElement::Se2 {
                angle: -angle,
                translation: -(rot2(*angle).transpose() * translation),
            },
            GroupElement::Se3 { rotation, translation } => GroupElement::Se3 {
                rotation: rotation.transpose(),
                translation: -(rotation.transpose() * translation),
            },
            GroupElement::Product(ps) => GroupElement::Product(ps.iter().map(Self::inverse).collect()),
        }
    }

    /// Group product `self * other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        Ok(match (self, other) {
            (GroupElement::So2 { angle: a }, GroupElement::So2 { angle: b }) => GroupElement::So2 {
                angle: wrap_angle(a + b),
            },
            (GroupElement::So3 { rotation: a }, GroupElement::So3 { rotation: b }) => GroupElement::So3 {
                rotation: renormalize_if_drifted(a * b),
            },
            (
                GroupElement::Se2 {
                    angle: a,
                    translation: ta,
                },
                GroupElement::Se2 {
                    angle: b,
                    translation: tb,
                },
            ) => GroupElement::Se2 {
                angle: wrap_angle(a + b),
                translation: ta + rot2(*a) * tb,
            },
            (
                GroupElement::Se3 {
                    rotation: ra,
                    translation: ta,
                },
                GroupElement::Se3 {
                    rotation: rb,
                    translation: tb,
                },
            ) => GroupElement::Se3 {
                rotation: renormalize_if_drifted(ra * rb),
                translation: ta + ra * tb,
            },
            (GroupElement::Product(pa), GroupElement::Product(pb)) if pa.len() == pb.len() => {
                GroupElement::Product(pa.iter().zip(pb).map(|(a, b)| a.compose(b)).collect::<Result<_>>()?)
            }
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "cannot compose {:?} with {:?}",
                    self.kind(),
                    other.kind()
                )))
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx_eq(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
        a.shape() == b.shape() && (a - b).norm() < tol
    }

    #[test]
    fn hat_of_zero_and_unit_x() {
        assert_eq!(hat(&[0.0; 3], &GroupKind::SO3).unwrap(), DMatrix::zeros(3, 3));
        let h = hat(&[1.0, 0.0, 0.0], &GroupKind::SO3).unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0]);
        assert_eq!(h, expected);
    }

    #[test]
    fn hat_rejects_wrong_length() {
        assert!(matches!(
            hat(&[1.0, 2.0], &GroupKind::SE3),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn exp_of_zero_is_identity() {
        for kind in [GroupKind::SO2, GroupKind::SO3, GroupKind::SE2, GroupKind::SE3] {
            let g = exp_map(&vec![0.0; kind.dim()], &kind).unwrap();
            assert!(approx_eq(
                &g.to_matrix(),
                &DMatrix::identity(kind.matrix_size(), kind.matrix_size()),
                1e-300
            ));
            assert_eq!(log_map(&g).unwrap().norm(), 0.0);
        }
    }

    #[test]
    fn quarter_turn_so2() {
        let g = exp_map(&[PI / 2.0], &GroupKind::SO2).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!(approx_eq(&g.to_matrix(), &expected, 1e-15));
    }

    #[test]
    fn log_at_pi_is_singular() {
        let g = exp_map(&[PI, 0.0, 0.0], &GroupKind::SO3).unwrap();
        assert!(matches!(log_map(&g), Err(Error::Singularity { .. })));
        let g = exp_map(&[PI], &GroupKind::SO2).unwrap();
        assert!(matches!(log_map(&g), Err(Error::Singularity { .. })));
        let g = exp_map(&[0.0, PI, 0.0, 1.0, 0.0, 0.0], &GroupKind::SE3).unwrap();
        assert!(log_map(&g).is_err());
    }

    #[test]
    fn adjoint_of_pure_translation() {
        let g = GroupElement::se3(Matrix3::identity(), Vector3::new(1.0, 0.0, 0.0)).unwrap();
        let ad = adjoint(&g);
        let lower_left = ad.view((3, 0), (3, 3)).into_owned();
        assert_eq!(lower_left, hat(&[1.0, 0.0, 0.0], &GroupKind::SO3).unwrap());
        assert_eq!(
            adjoint(&GroupElement::identity(&GroupKind::SE3)),
            DMatrix::identity(6, 6)
        );
    }

    #[test]
    fn adjoint_of_inverse_matches_transition_block_form() {
        // Ad(g^-1) = [[R^T, 0], [-R^T p^, R^T]]
        let g = exp_map(&[0.2, -0.1, 0.3, 1.0, 0.5, -0.2], &GroupKind::SE3).unwrap();
        let (r, p) = match &g {
            GroupElement::Se3 { rotation, translation } => (*rotation, *translation),
            _ => unreachable!(),
        };
        let ad = adjoint(&g.inverse());
        let expected_ll = -(r.transpose() * skew3(&p));
        let ll = ad.view((3, 0), (3, 3)).into_owned();
        let expected = DMatrix::from_fn(3, 3, |i, j| expected_ll[(i, j)]);
        assert!(approx_eq(&ll, &expected, 1e-14));
    }

    #[test]
    fn se2_adjoint_matches_conjugation() {
        let g = GroupElement::se2(0.7, Vector2::new(1.5, -0.4));
        let xi = [0.3, -0.2, 0.9];
        let lhs = g.to_matrix() * hat(&xi, &GroupKind::SE2).unwrap() * g.inverse().to_matrix();
        let rhs = adjoint(&g) * DVector::from_row_slice(&xi);
        assert!((vee(&lhs, &GroupKind::SE2).unwrap() - rhs).norm() < 1e-14);
    }

    #[test]
    fn product_factors_compose_independently() {
        let kind = GroupKind::Product(vec![GroupKind::SO2, GroupKind::SE3]);
        let a = exp_map(&[0.1, 0.2, 0.0, 0.1, 1.0, 2.0, 3.0], &kind).unwrap();
        let b = exp_map(&[-0.4, 0.0, 0.3, 0.0, 0.0, 1.0, 0.0], &kind).unwrap();
        let ab = a.compose(&b).unwrap();
        assert!(approx_eq(&ab.to_matrix(), &(a.to_matrix() * b.to_matrix()), 1e-14));
        assert_eq!(kind.factor_dims(), vec![1, 3, 3]);
    }

    #[test]
    fn invalid_rotation_rejected() {
        let mut r = Matrix3::identity();
        r[(0, 0)] = -1.0;
        assert!(GroupElement::so3(r).is_err());
        r[(0, 0)] = 1.01;
        assert!(GroupElement::so3(r).is_err());
    }

    #[test]
    fn polar_projection_removes_drift() {
        let r = so3_exp(&Vector3::new(0.3, 0.2, -0.5)) * 1.0001;
        let fixed = orthonormalize(&r);
        assert!((fixed.transpose() * fixed - Matrix3::identity()).norm() < 1e-14);
    }
}
