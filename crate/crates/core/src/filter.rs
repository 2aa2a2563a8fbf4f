//! Covariance and information recursions for the linearized invariant
//! filter, with the exact split of each step's log-volume change into a
//! process-noise term and a measurement term.
//!
//! With `M = F P F^T` the transported covariance, one step satisfies
//!
//! ```text
//! log det P+ - log det P = log det(I + Q M^-1) - log det(I + P- S) + 2 log|det F|
//! ```
//!
//! where `P- = M + Q`. For unimodular `F` the last term vanishes. The first
//! term reduces to `log det(I + Q J)` when `F` is orthogonal and `F^T Q F = Q`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::{self, chol_log_det, cholesky, symmetrize};

/// `|det F - 1|` above which a decomposition is flagged approximate.
pub const UNIMODULAR_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    covariance: DMatrix<f64>,
    t: usize,
    log_det: f64,
}

impl BeliefState {
    pub fn new(covariance: DMatrix<f64>, t: usize) -> Result<Self> {
        let covariance = symmetrize(&covariance);
        let log_det = linalg::log_det_spd(&covariance, "covariance")?;
        Ok(Self { covariance, t, log_det })
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn information(&self) -> Result<DMatrix<f64>> {
        linalg::inverse_spd(&self.covariance, "covariance")
    }

    pub fn time(&self) -> usize {
        self.t
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn dim(&self) -> usize {
        self.covariance.nrows()
    }

    fn check_square(&self, m: &DMatrix<f64>, context: &'static str) -> Result<()> {
        if m.shape() != (self.dim(), self.dim()) {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.dim(),
                actual: m.nrows(),
            });
        }
        Ok(())
    }
}

/// `P- = F P F^T + Q`.
pub fn predict(belief: &BeliefState, f: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<BeliefState> {
    belief.check_square(f, "transition")?;
    belief.check_square(q, "process noise")?;
    let prior = f * belief.covariance() * f.transpose() + q;
    BeliefState::new(prior, belief.t + 1).map_err(|_| Error::NotPositiveDefinite("predicted covariance"))
}

/// `P+ = (P-^{-1} + S)^{-1}`, evaluated as `L (I + L^T S L)^{-1} L^T` with
/// `P- = L L^T` so the prior is never inverted.
pub fn update(prior: &BeliefState, s: &DMatrix<f64>) -> Result<BeliefState> {
    prior.check_square(s, "spatial information")?;
    let l = cholesky(prior.covariance(), "prior covariance")?.l();
    let n = prior.dim();
    let inner = DMatrix::identity(n, n) + l.transpose() * s * &l;
    let inner_chol = cholesky(&inner, "I + L^T S L")?;
    let posterior = &l * inner_chol.solve(&l.transpose());
    BeliefState::new(posterior, prior.t).map_err(|_| Error::NotPositiveDefinite("posterior covariance"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionRecord {
    /// `log det(I + Q (F P F^T)^{-1})`: volume added by process noise.
    pub temporal: f64,
    /// `log det(I + P- S)`: volume removed by the measurement update.
    pub spatial: f64,
    /// `log det P+ - log det P` from the two covariances directly.
    pub delta_log_det: f64,
    /// `log det(I + Q J)` with the un-transported information `J = P^{-1}`.
    pub temporal_statement: f64,
    /// `log det(I + P S)` with the un-propagated covariance.
    pub spatial_statement: f64,
    pub det_transition: f64,
    /// Set when `det F` is not one, so the split is not exact.
    pub approximate: bool,
}

impl DecompositionRecord {
    /// `delta_log_det - (temporal - spatial)`.
    pub fn residual(&self) -> f64 {
        self.delta_log_det - (self.temporal - self.spatial)
    }
}

/// `log det(I + A^{-1} B)` for SPD `A` and symmetric PSD `B`, through the
/// congruent SPD matrix `I + L^{-1} B L^{-T}`.
fn log_det_one_plus(a: &DMatrix<f64>, b: &DMatrix<f64>, what: &'static str) -> Result<f64> {
    let l = cholesky(a, what)?.l();
    let n = a.nrows();
    let x = l.solve_lower_triangular(b).ok_or(Error::NotPositiveDefinite(what))?;
    let y = l
        .solve_lower_triangular(&x.transpose())
        .ok_or(Error::NotPositiveDefinite(what))?;
    let m = DMatrix::identity(n, n) + symmetrize(&y);
    Ok(chol_log_det(&cholesky(&m, what)?))
}

/// `log det(I + L^T B L)` with `A = L L^T`; equals `log det(I + A B)`.
fn log_det_one_plus_product(a: &DMatrix<f64>, b: &DMatrix<f64>, what: &'static str) -> Result<f64> {
    let l = cholesky(a, what)?.l();
    let n = a.nrows();
    let m = DMatrix::identity(n, n) + symmetrize(&(l.transpose() * b * &l));
    Ok(chol_log_det(&cholesky(&m, what)?))
}

/// One predict + update step together with its log-volume decomposition.
pub fn step_with_decomposition(
    belief: &BeliefState,
    f: &DMatrix<f64>,
    q: &DMatrix<f64>,
    s: &DMatrix<f64>,
) -> Result<(BeliefState, DecompositionRecord)> {
    belief.check_square(f, "transition")?;
    let det_transition = f.clone().lu().determinant();
    let approximate = det_transition.is_nan() || (det_transition - 1.0).abs() > UNIMODULAR_TOL;

    let prior = predict(belief, f, q)?;
    let transported = symmetrize(&(f * belief.covariance() * f.transpose()));
    let temporal = match log_det_one_plus(&transported, q, "transported covariance") {
        Ok(v) => v,
        // Singular F: fall back to the direct difference, already flagged.
        Err(_) => prior.log_det() - belief.log_det(),
    };
    let spatial = log_det_one_plus_product(prior.covariance(), s, "prior covariance")?;
    let posterior = update(&prior, s)?;

    let record = DecompositionRecord {
        temporal,
        spatial,
        delta_log_det: posterior.log_det() - belief.log_det(),
        temporal_statement: log_det_one_plus(belief.covariance(), q, "covariance")?,
        spatial_statement: log_det_one_plus_product(belief.covariance(), s, "covariance")?,
        det_transition,
        approximate,
    };
    Ok((posterior, record))
}

/// Decomposition of a bare measurement update (no prediction before it).
pub fn update_with_decomposition(prior: &BeliefState, s: &DMatrix<f64>) -> Result<(BeliefState, DecompositionRecord)> {
    let spatial = log_det_one_plus_product(prior.covariance(), s, "prior covariance")?;
    let posterior = update(prior, s)?;
    Ok((
        posterior.clone(),
        DecompositionRecord {
            temporal: 0.0,
            spatial,
            delta_log_det: posterior.log_det() - prior.log_det(),
            temporal_statement: 0.0,
            spatial_statement: spatial,
            det_transition: 1.0,
            approximate: false,
        },
    ))
}

/// Information-form step: `J+ = (F J^{-1} F^T + Q)^{-1} + S`.
///
/// The prediction uses the transported information `F^-T J F^-1` and a
/// Woodbury correction over a factor `Q = G G^T`, so singular `Q` is fine.
pub fn information_step(
    information: &DMatrix<f64>,
    f: &DMatrix<f64>,
    q: &DMatrix<f64>,
    s: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let n = information.nrows();
    let lu = f.clone().lu();
    let x = lu
        .solve(&DMatrix::identity(n, n))
        .ok_or_else(|| Error::InvalidArgument("transition is singular".into()))?;
    let transported = symmetrize(&(x.transpose() * information * &x));

    let eig = SymmetricEigen::new(symmetrize(q));
    let scale = eig.eigenvalues.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    let keep: Vec<usize> = (0..n)
        .filter(|&k| eig.eigenvalues[k] > f64::EPSILON * n as f64 * scale)
        .collect();
    let g = DMatrix::from_fn(n, keep.len(), |r, c| {
        eig.eigenvectors[(r, keep[c])] * eig.eigenvalues[keep[c]].sqrt()
    });

    let prior_info = if g.ncols() == 0 {
        transported
    } else {
        let jg = &transported * &g;
        let inner = DMatrix::identity(g.ncols(), g.ncols()) + g.transpose() * &jg;
        let corr = cholesky(&inner, "I + G^T J G")?.solve(&jg.transpose());
        symmetrize(&(&transported - jg * corr))
    };
    Ok(symmetrize(&(prior_info + s)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(x: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, x)
    }

    #[test]
    fn predict_without_noise_or_motion_is_identity() {
        let b = BeliefState::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]), 0).unwrap();
        let p = predict(&b, &DMatrix::identity(2, 2), &DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(p.covariance(), b.covariance());
        assert_eq!(p.time(), 1);
    }

    #[test]
    fn scalar_predict_and_update() {
        let b = BeliefState::new(scalar(1.0), 0).unwrap();
        let p = predict(&b, &scalar(1.0), &scalar(1.0)).unwrap();
        assert_eq!(p.covariance()[(0, 0)], 2.0);
        assert!((p.log_det() - 2.0_f64.ln()).abs() < 1e-15);
        let u = update(&b, &scalar(1.0)).unwrap();
        assert!((u.covariance()[(0, 0)] - 0.5).abs() < 1e-15);
        let same = update(&b, &scalar(0.0)).unwrap();
        assert_eq!(same.covariance(), b.covariance());
    }

    #[test]
    fn scalar_decomposition_by_hand() {
        let b = BeliefState::new(scalar(1.0), 0).unwrap();
        let (post, rec) = step_with_decomposition(&b, &scalar(1.0), &scalar(1.0), &scalar(1.0)).unwrap();
        assert!((rec.temporal - 2.0_f64.ln()).abs() < 1e-15);
        assert!((rec.spatial - 3.0_f64.ln()).abs() < 1e-15);
        assert!((post.covariance()[(0, 0)] - 2.0 / 3.0).abs() < 1e-15);
        assert!((rec.delta_log_det - (2.0_f64 / 3.0).ln()).abs() < 1e-15);
        assert!(!rec.approximate);
    }

    #[test]
    fn zero_noise_and_information_give_zero_record() {
        let b = BeliefState::new(DMatrix::identity(3, 3), 0).unwrap();
        let (_, rec) = step_with_decomposition(
            &b,
            &DMatrix::identity(3, 3),
            &DMatrix::zeros(3, 3),
            &DMatrix::zeros(3, 3),
        )
        .unwrap();
        assert_eq!((rec.temporal, rec.spatial, rec.delta_log_det), (0.0, 0.0, 0.0));
    }

    #[test]
    fn non_unimodular_flagged() {
        let b = BeliefState::new(DMatrix::identity(2, 2), 0).unwrap();
        let f = DMatrix::identity(2, 2) * 2.0;
        let (_, rec) = step_with_decomposition(&b, &f, &DMatrix::zeros(2, 2), &DMatrix::zeros(2, 2)).unwrap();
        assert!(rec.approximate);
        // 2 log|det F| with det F = 4
        assert!((rec.residual() - 16.0_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn indefinite_covariance_rejected() {
        assert!(BeliefState::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]), 0).is_err());
    }
}
