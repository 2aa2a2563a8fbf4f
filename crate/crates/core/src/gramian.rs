//! Observability Gramians and the cross-factor coupling analysis.
//!
//! For a channel local to factor `i` (`H_t = H~_t Pi_i`), the `j`-block of
//! the Gramian only sees the coupling block `Pi_i Phi(t,0) iota_j`, which
//! carries factor-`j` errors into the measured factor. The reachable subspace
//! of factor `j` is the span of the transposed coupling blocks over the
//! horizon; the block Gramian is positive exactly there when sensing on `i`
//! is nondegenerate.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, RankTolerance};
use crate::subspace::Subspace;
use crate::system::{Channel, ErrorSystem};

#[derive(Debug, Clone, PartialEq)]
pub struct Gramian {
    pub w: DMatrix<f64>,
    pub horizon: usize,
    pub channel_count: usize,
}

impl Gramian {
    pub fn rank(&self, tol: RankTolerance) -> usize {
        self.w.nrows() - linalg::psd_null_space(&self.w, tol).ncols()
    }
}

fn check_horizon(horizon: usize) -> Result<()> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("Gramian horizon must be at least 1".into()));
    }
    Ok(())
}

/// `W(T) = sum_{t<T} Phi(t,0)^T (sum_k H^T R^-1 H) Phi(t,0)`.
pub fn gramian(sys: &ErrorSystem, channels: &[Channel], horizon: usize) -> Result<Gramian> {
    check_horizon(horizon)?;
    for ch in channels {
        sys.check_channel(ch, horizon)?;
    }
    let n = sys.dim();
    let mut w = DMatrix::zeros(n, n);
    for t in 0..horizon {
        let phi = sys.transition_from_origin(t)?;
        for ch in channels {
            w += phi.transpose() * ch.information(t)? * phi;
        }
    }
    Ok(Gramian {
        w: linalg::symmetrize(&w),
        horizon,
        channel_count: channels.len(),
    })
}

fn locality(ch: &Channel) -> Result<usize> {
    ch.locality()
        .map(|l| l.factor)
        .ok_or_else(|| Error::NotFactorLocal(ch.name().to_string()))
}

/// Block `Pi_i Phi(t,0) iota_j` from factor `j` into the measured factor `i`.
pub fn coupling_block(sys: &ErrorSystem, measured: usize, target: usize, t: usize) -> Result<DMatrix<f64>> {
    sys.cross_block(measured, target, t)
}

/// `Pi_j W(T) Pi_j^T` for a single factor-local channel, assembled from the
/// local map and the coupling blocks only.
pub fn gramian_block(sys: &ErrorSystem, channel: &Channel, j: usize, horizon: usize) -> Result<DMatrix<f64>> {
    check_horizon(horizon)?;
    sys.check_channel(channel, horizon)?;
    let i = locality(channel)?;
    let dj = sys.factors().dim(j)?;
    let r_inv = channel.noise_inverse();
    let mut block = DMatrix::zeros(dj, dj);
    for t in 0..horizon {
        let c = coupling_block(sys, i, j, t)?;
        let local = channel.local_at(t)?;
        let hc = local * &c;
        block += hc.transpose() * r_inv * hc;
    }
    Ok(linalg::symmetrize(&block))
}

/// Factor-local Gramian on the measured factor itself (the excitation sum).
pub fn local_gramian(sys: &ErrorSystem, channel: &Channel, horizon: usize) -> Result<DMatrix<f64>> {
    let i = locality(channel)?;
    gramian_block(sys, channel, i, horizon)
}

/// Relative threshold for persistent excitation: `1e-9 * trace`.
pub const PE_RELATIVE_THRESHOLD: f64 = 1e-9;

pub fn is_persistently_exciting(sys: &ErrorSystem, channel: &Channel, horizon: usize) -> Result<bool> {
    let local = local_gramian(sys, channel, horizon)?;
    Ok(pe_holds(&local))
}

fn pe_holds(local: &DMatrix<f64>) -> bool {
    let tr = local.trace();
    tr > 0.0 && linalg::min_eigenvalue(local) > PE_RELATIVE_THRESHOLD * tr
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingVerdict {
    None,
    Partial,
    Full,
}

impl CouplingVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            CouplingVerdict::None => "none",
            CouplingVerdict::Partial => "partial",
            CouplingVerdict::Full => "full",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CrossFactorReport {
    pub measured_factor: usize,
    pub target_factor: usize,
    pub horizon: usize,
    pub verdict: CouplingVerdict,
    /// Reachable subspace of the target factor, in factor-local coordinates.
    pub reachable: Subspace,
    pub gramian_block: DMatrix<f64>,
    /// Smallest eigenvalue of the block Gramian restricted to `reachable`.
    pub restricted_min_eigenvalue: Option<f64>,
    pub positive_on_reachable: bool,
    pub persistently_exciting: bool,
    /// Directions of the measured factor never excited over the horizon.
    pub pe_deficient: Subspace,
}

impl CrossFactorReport {
    /// Target-factor directions outside the reachable subspace.
    pub fn unobservable_dim(&self) -> usize {
        self.reachable.ambient_dim() - self.reachable.dim()
    }
}

fn reachable_span(
    sys: &ErrorSystem,
    measured: usize,
    target: usize,
    horizon: usize,
    tol: RankTolerance,
) -> Result<Subspace> {
    let dj = sys.factors().dim(target)?;
    let mut span = Subspace::zero(dj, tol);
    for t in 0..horizon {
        span = span.extended(&coupling_block(sys, measured, target, t)?.transpose());
    }
    Ok(span)
}

pub fn cross_factor_analysis(
    sys: &ErrorSystem,
    channel: &Channel,
    target: usize,
    horizon: usize,
    tol: RankTolerance,
) -> Result<CrossFactorReport> {
    let measured = locality(channel)?;
    let block = gramian_block(sys, channel, target, horizon)?;
    let local = local_gramian(sys, channel, horizon)?;
    let persistently_exciting = pe_holds(&local);
    let pe_deficient = if persistently_exciting {
        Subspace::zero(local.nrows(), tol)
    } else {
        let ns = linalg::psd_null_space(&local, RankTolerance::with_floor(PE_RELATIVE_THRESHOLD * local.trace()));
        Subspace::from_orthonormal(ns, tol)
    };

    let reachable = reachable_span(sys, measured, target, horizon, tol)?;
    let verdict = if reachable.is_zero() {
        CouplingVerdict::None
    } else if reachable.is_full() {
        CouplingVerdict::Full
    } else {
        CouplingVerdict::Partial
    };

    let (restricted_min_eigenvalue, positive_on_reachable) = if reachable.is_zero() {
        (None, false)
    } else {
        let b = reachable.basis();
        let restricted = b.transpose() * &block * b;
        let lam = linalg::min_eigenvalue(&restricted);
        let cut = tol.threshold(linalg::max_eigenvalue(&block), block.nrows());
        (Some(lam), lam > cut)
    };

    Ok(CrossFactorReport {
        measured_factor: measured,
        target_factor: target,
        horizon,
        verdict,
        reachable,
        gramian_block: block,
        restricted_min_eigenvalue,
        positive_on_reachable,
        persistently_exciting,
        pe_deficient,
    })
}

/// Smallest `T <= t_max` at which the reachable subspace fills the target factor.
pub fn observability_index(
    sys: &ErrorSystem,
    channel: &Channel,
    target: usize,
    t_max: usize,
    tol: RankTolerance,
) -> Result<Option<usize>> {
    check_horizon(t_max)?;
    sys.check_channel(channel, t_max)?;
    let measured = locality(channel)?;
    let dj = sys.factors().dim(target)?;
    let mut span = Subspace::zero(dj, tol);
    for t in 0..t_max {
        span = span.extended(&coupling_block(sys, measured, target, t)?.transpose());
        if span.is_full() {
            return Ok(Some(t + 1));
        }
    }
    Ok(None)
}

/// Reachable-subspace dimension for every horizon `1..=t_max`.
pub fn reachable_profile(
    sys: &ErrorSystem,
    channel: &Channel,
    target: usize,
    t_max: usize,
    tol: RankTolerance,
) -> Result<Vec<usize>> {
    check_horizon(t_max)?;
    sys.check_channel(channel, t_max)?;
    let measured = locality(channel)?;
    let mut span = Subspace::zero(sys.factors().dim(target)?, tol);
    let mut dims = Vec::with_capacity(t_max);
    for t in 0..t_max {
        span = span.extended(&coupling_block(sys, measured, target, t)?.transpose());
        dims.push(span.dim());
    }
    Ok(dims)
}

/// Kernel of the Gramian.
pub fn unobservable_subspace(w: &Gramian, tol: RankTolerance) -> Subspace {
    Subspace::from_orthonormal(linalg::psd_null_space(&w.w, tol), tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{FactorStructure, Schedule};

    fn scalar_system(f: f64, horizon: usize) -> ErrorSystem {
        ErrorSystem::constant(
            FactorStructure::single(1).unwrap(),
            DMatrix::from_element(1, 1, f),
            horizon,
        )
        .unwrap()
    }

    fn unit_channel(n: usize) -> Channel {
        Channel::new(
            "h",
            Schedule::Constant(DMatrix::identity(n, n)),
            DMatrix::identity(n, n),
        )
        .unwrap()
    }

    #[test]
    fn scalar_accumulation() {
        let sys = scalar_system(1.0, 5);
        let ch = unit_channel(1);
        assert_eq!(gramian(&sys, std::slice::from_ref(&ch), 1).unwrap().w[(0, 0)], 1.0);
        assert_eq!(gramian(&sys, &[ch], 3).unwrap().w[(0, 0)], 3.0);
    }

    #[test]
    fn zero_measurements_give_zero_gramian() {
        let sys = scalar_system(1.3, 4);
        let ch = Channel::new("z", Schedule::Constant(DMatrix::zeros(1, 1)), DMatrix::identity(1, 1)).unwrap();
        assert_eq!(gramian(&sys, &[ch], 4).unwrap().w, DMatrix::zeros(1, 1));
    }

    #[test]
    fn zero_horizon_rejected() {
        let sys = scalar_system(1.0, 4);
        assert!(gramian(&sys, &[unit_channel(1)], 0).is_err());
    }

    fn two_factor_decoupled() -> ErrorSystem {
        ErrorSystem::constant(FactorStructure::new(vec![2, 2]).unwrap(), DMatrix::identity(4, 4), 10).unwrap()
    }

    fn local(fs: &FactorStructure, i: usize, h: DMatrix<f64>) -> Channel {
        let p = h.nrows();
        Channel::factor_local("loc", fs, i, Schedule::Constant(h), DMatrix::identity(p, p)).unwrap()
    }

    #[test]
    fn decoupled_block_is_zero_and_self_block_counts_steps() {
        let sys = two_factor_decoupled();
        let ch = local(sys.factors(), 0, DMatrix::identity(2, 2));
        assert_eq!(gramian_block(&sys, &ch, 1, 4).unwrap(), DMatrix::zeros(2, 2));
        assert_eq!(gramian_block(&sys, &ch, 0, 4).unwrap(), DMatrix::identity(2, 2) * 4.0);
        let report = cross_factor_analysis(&sys, &ch, 1, 6, RankTolerance::default()).unwrap();
        assert_eq!(report.verdict, CouplingVerdict::None);
        assert!(report.reachable.is_zero());
        assert_eq!(
            observability_index(&sys, &ch, 1, 6, RankTolerance::default()).unwrap(),
            None
        );
    }

    #[test]
    fn non_local_channel_rejected() {
        let sys = two_factor_decoupled();
        assert!(matches!(
            gramian_block(&sys, &unit_channel(4), 0, 2),
            Err(Error::NotFactorLocal(_))
        ));
    }

    #[test]
    fn persistent_excitation_cases() {
        let fs = FactorStructure::single(2).unwrap();
        let still = ErrorSystem::constant(fs.clone(), DMatrix::identity(2, 2), 10).unwrap();
        let full = local(&fs, 0, DMatrix::identity(2, 2));
        let partial = local(&fs, 0, DMatrix::from_row_slice(1, 2, &[1.0, 0.0]));
        assert!(is_persistently_exciting(&still, &full, 1).unwrap());
        for t in 1..=10 {
            assert!(!is_persistently_exciting(&still, &partial, t).unwrap());
        }
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let spinning = ErrorSystem::constant(fs, rot, 10).unwrap();
        assert!(!is_persistently_exciting(&spinning, &partial, 1).unwrap());
        assert!(is_persistently_exciting(&spinning, &partial, 2).unwrap());
    }

    #[test]
    fn unobservable_subspace_extremes() {
        let tol = RankTolerance::default();
        let zero = Gramian {
            w: DMatrix::zeros(3, 3),
            horizon: 1,
            channel_count: 0,
        };
        assert!(unobservable_subspace(&zero, tol).is_full());
        let id = Gramian {
            w: DMatrix::identity(3, 3),
            horizon: 1,
            channel_count: 1,
        };
        assert!(unobservable_subspace(&id, tol).is_zero());
    }

    #[test]
    fn pe_deficiency_reported() {
        let fs = FactorStructure::new(vec![2, 1]).unwrap();
        let sys = ErrorSystem::constant(fs.clone(), DMatrix::identity(3, 3), 4).unwrap();
        let ch = local(&fs, 0, DMatrix::from_row_slice(1, 2, &[1.0, 0.0]));
        let r = cross_factor_analysis(&sys, &ch, 1, 4, RankTolerance::default()).unwrap();
        assert!(!r.persistently_exciting);
        assert_eq!(r.pe_deficient.dim(), 1);
    }
}
