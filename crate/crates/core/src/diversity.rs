//! Propagated observation subspaces and the structural redundancy test for
//! candidate sensors.
//!
//! `S_K(T)` is the span of `Phi(t,0)^T H_t^(k)T` over existing channels and
//! `t < T`; it coincides with the range of the Gramian `W^(K)(T)`. A candidate
//! is redundant when every propagated candidate row already lies in `S_K(T)`,
//! which is exactly the condition for the candidate to leave the kernel of
//! the Gramian untouched at that horizon.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::gramian::gramian;
use crate::linalg::{self, RankTolerance};
use crate::subspace::Subspace;
use crate::system::{Channel, ErrorSystem};

/// Relative factor for the default redundancy threshold.
pub const DEFAULT_EPSILON_FACTOR: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct PropagatedSubspace {
    pub subspace: Subspace,
    pub horizon: usize,
    pub channels: Vec<String>,
}

impl PropagatedSubspace {
    pub fn empty(ambient_dim: usize, horizon: usize, tol: RankTolerance) -> Self {
        Self {
            subspace: Subspace::zero(ambient_dim, tol),
            horizon,
            channels: Vec::new(),
        }
    }

    /// Folds one more channel into the span.
    pub fn with_channel(&self, sys: &ErrorSystem, channel: &Channel) -> Result<Self> {
        let rows = propagated_rows(sys, channel, self.horizon)?;
        let mut channels = self.channels.clone();
        channels.push(channel.name().to_string());
        Ok(Self {
            subspace: self.subspace.extended(&rows),
            horizon: self.horizon,
            channels,
        })
    }

    pub fn dim(&self) -> usize {
        self.subspace.dim()
    }
}

/// Columns `Phi(t,0)^T H_t^T` for `t < horizon`, stacked side by side.
pub fn propagated_rows(sys: &ErrorSystem, channel: &Channel, horizon: usize) -> Result<DMatrix<f64>> {
    sys.check_channel(channel, horizon)?;
    let blocks = (0..horizon)
        .map(|t| Ok(sys.transition_from_origin(t)?.transpose() * channel.measurement_at(t)?.transpose()))
        .collect::<Result<Vec<_>>>()?;
    Ok(linalg::hstack(&blocks, sys.dim()))
}

pub fn propagated_subspace(
    sys: &ErrorSystem,
    channels: &[Channel],
    horizon: usize,
    tol: RankTolerance,
) -> Result<PropagatedSubspace> {
    channels
        .iter()
        .try_fold(PropagatedSubspace::empty(sys.dim(), horizon, tol), |s, ch| {
            s.with_channel(sys, ch)
        })
}

#[derive(Debug, Clone)]
pub enum DiversityVerdict {
    Redundant,
    /// Orthonormal directions the candidate adds beyond the existing span.
    Gain(Subspace),
}

#[derive(Debug, Clone)]
pub struct DiversityCheck {
    pub verdict: DiversityVerdict,
    /// Spectral norm of the innovation matrix.
    pub innovation_norm: f64,
    pub epsilon: f64,
}

impl DiversityCheck {
    pub fn is_redundant(&self) -> bool {
        matches!(self.verdict, DiversityVerdict::Redundant)
    }

    pub fn innovation_dim(&self) -> usize {
        match &self.verdict {
            DiversityVerdict::Redundant => 0,
            DiversityVerdict::Gain(s) => s.dim(),
        }
    }
}

/// Projects the candidate's propagated rows off `existing` and decides
/// redundancy by the spectral norm of what is left.
///
/// `epsilon` defaults to `1e-8 * sigma_max` of the candidate rows.
pub fn diversity_check(
    sys: &ErrorSystem,
    existing: &PropagatedSubspace,
    candidate: &Channel,
    epsilon: Option<f64>,
) -> Result<DiversityCheck> {
    let rows = propagated_rows(sys, candidate, existing.horizon)?;
    let epsilon = epsilon.unwrap_or_else(|| DEFAULT_EPSILON_FACTOR * linalg::spectral_norm(&rows));
    let innovation = existing.subspace.residual(&rows);
    let innovation_norm = linalg::spectral_norm(&innovation);
    let verdict = if innovation_norm <= epsilon {
        DiversityVerdict::Redundant
    } else {
        let basis = linalg::orthonormal_range(&innovation, RankTolerance::with_floor(epsilon));
        DiversityVerdict::Gain(Subspace::from_orthonormal(basis, existing.subspace.tolerance()))
    };
    Ok(DiversityCheck {
        verdict,
        innovation_norm,
        epsilon,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IncrementVerdict {
    /// The kernel of the existing Gramian is preserved.
    Unchanged,
    RankIncrease,
    /// The kernel form is nonzero but the numerical rank did not move.
    EigenvalueIncrease,
}

impl IncrementVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            IncrementVerdict::Unchanged => "unchanged",
            IncrementVerdict::RankIncrease => "rank_increase",
            IncrementVerdict::EigenvalueIncrease => "eigenvalue_increase",
        }
    }
}

#[derive(Debug, Clone)]
pub struct GramianIncrement {
    pub delta: DMatrix<f64>,
    pub verdict: IncrementVerdict,
    /// Spectral norm of `N^T dW N` for an orthonormal kernel basis `N` of `W^(K)`.
    pub kernel_form_norm: f64,
    pub rank_before: usize,
    pub rank_after: usize,
}

/// Gramian change from adding `candidate` to `base` at horizon `T`.
pub fn gramian_increment(
    sys: &ErrorSystem,
    base: &[Channel],
    candidate: &Channel,
    horizon: usize,
    tol: RankTolerance,
) -> Result<GramianIncrement> {
    let before = gramian(sys, base, horizon)?;
    let delta = gramian(sys, std::slice::from_ref(candidate), horizon)?.w;
    let after = &before.w + &delta;

    let kernel = linalg::psd_null_space(&before.w, tol);
    let kernel_form_norm = if kernel.ncols() == 0 {
        0.0
    } else {
        linalg::spectral_norm(&(kernel.transpose() * &delta * &kernel))
    };
    let n = sys.dim();
    let rank_before = n - kernel.ncols();
    let rank_after = n - linalg::psd_null_space(&after, tol).ncols();

    let cut = tol.threshold(linalg::spectral_norm(&delta), n);
    let verdict = if kernel_form_norm <= cut {
        IncrementVerdict::Unchanged
    } else if rank_after > rank_before {
        IncrementVerdict::RankIncrease
    } else {
        IncrementVerdict::EigenvalueIncrease
    };
    Ok(GramianIncrement {
        delta,
        verdict,
        kernel_form_norm,
        rank_before,
        rank_after,
    })
}

/// Greedy structural selection: repeatedly adds the candidate with the
/// largest innovation dimension until none contributes new directions.
/// Returns indices into `candidates` in selection order.
pub fn greedy_selection(
    sys: &ErrorSystem,
    base: &[Channel],
    candidates: &[Channel],
    horizon: usize,
    tol: RankTolerance,
) -> Result<Vec<usize>> {
    let mut span = propagated_subspace(sys, base, horizon, tol)?;
    let mut chosen = Vec::new();
    loop {
        let mut best: Option<(usize, usize)> = None;
        for (k, cand) in candidates.iter().enumerate() {
            if chosen.contains(&k) {
                continue;
            }
            let gain = diversity_check(sys, &span, cand, None)?.innovation_dim();
            if gain > 0 && best.is_none_or(|(_, g)| gain > g) {
                best = Some((k, gain));
            }
        }
        match best {
            Some((k, _)) => {
                span = span.with_channel(sys, &candidates[k])?;
                chosen.push(k);
            }
            None => return Ok(chosen),
        }
    }
}
