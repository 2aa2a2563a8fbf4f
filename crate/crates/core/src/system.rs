//! Linearized error dynamics `dx_{t+1} = F_t dx_t + w_t` over a factored
//! Lie algebra, and the observation channels attached to it.

use std::ops::Range;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Direct-sum split of the algebra into factors with contiguous coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorStructure {
    dims: Vec<usize>,
    offsets: Vec<usize>,
}

impl FactorStructure {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "factor dimensions must be positive and non-empty, got {dims:?}"
            )));
        }
        let offsets = dims
            .iter()
            .scan(0, |acc, d| {
                let o = *acc;
                *acc += d;
                Some(o)
            })
            .collect();
        Ok(Self { dims, offsets })
    }

    /// A single unfactored block of dimension `n`.
    pub fn single(n: usize) -> Result<Self> {
        Self::new(vec![n])
    }

    pub fn count(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().sum()
    }

    pub fn dim(&self, j: usize) -> Result<usize> {
        self.check(j)?;
        Ok(self.dims[j])
    }

    pub fn range(&self, j: usize) -> Result<Range<usize>> {
        self.check(j)?;
        Ok(self.offsets[j]..self.offsets[j] + self.dims[j])
    }

    fn check(&self, j: usize) -> Result<()> {
        if j >= self.dims.len() {
            return Err(Error::FactorIndex {
                index: j,
                count: self.dims.len(),
            });
        }
        Ok(())
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.total_dim() {
            return Err(Error::DimensionMismatch {
                context: "algebra vector",
                expected: self.total_dim(),
                actual: len,
            });
        }
        Ok(())
    }

    /// Canonical projection onto factor `j`.
    pub fn project(&self, v: &DVector<f64>, j: usize) -> Result<DVector<f64>> {
        self.check_len(v.len())?;
        let r = self.range(j)?;
        Ok(v.rows(r.start, r.len()).into_owned())
    }

    /// Canonical injection of factor-`j` coordinates.
    pub fn inject(&self, u: &DVector<f64>, j: usize) -> Result<DVector<f64>> {
        let r = self.range(j)?;
        if u.len() != r.len() {
            return Err(Error::DimensionMismatch {
                context: "factor vector",
                expected: r.len(),
                actual: u.len(),
            });
        }
        let mut v = DVector::zeros(self.total_dim());
        v.rows_mut(r.start, r.len()).copy_from(u);
        Ok(v)
    }

    /// Rows of `m` belonging to factor `j`.
    pub fn project_rows(&self, m: &DMatrix<f64>, j: usize) -> Result<DMatrix<f64>> {
        self.check_len(m.nrows())?;
        let r = self.range(j)?;
        Ok(m.rows(r.start, r.len()).into_owned())
    }

    /// The `(j, i)` block `Pi_j M iota_i` of an `n x n` matrix.
    pub fn block(&self, m: &DMatrix<f64>, j: usize, i: usize) -> Result<DMatrix<f64>> {
        self.check_len(m.nrows())?;
        self.check_len(m.ncols())?;
        let (rj, ri) = (self.range(j)?, self.range(i)?);
        Ok(m.view((rj.start, ri.start), (rj.len(), ri.len())).into_owned())
    }

    /// Embeds a local map on factor `i` into a full-width matrix `local * Pi_i`.
    pub fn embed_columns(&self, local: &DMatrix<f64>, i: usize) -> Result<DMatrix<f64>> {
        let r = self.range(i)?;
        if local.ncols() != r.len() {
            return Err(Error::DimensionMismatch {
                context: "local map columns",
                expected: r.len(),
                actual: local.ncols(),
            });
        }
        let mut out = DMatrix::zeros(local.nrows(), self.total_dim());
        out.view_mut((0, r.start), local.shape()).copy_from(local);
        Ok(out)
    }
}

/// A matrix-valued sequence indexed by time step.
#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    Constant(DMatrix<f64>),
    PerStep(Vec<DMatrix<f64>>),
}

impl Schedule {
    pub fn at(&self, t: usize) -> Option<&DMatrix<f64>> {
        match self {
            Schedule::Constant(m) => Some(m),
            Schedule::PerStep(ms) => ms.get(t),
        }
    }

    /// Number of defined steps; `None` means unbounded.
    pub fn len(&self) -> Option<usize> {
        match self {
            Schedule::Constant(_) => None,
            Schedule::PerStep(ms) => Some(ms.len()),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    fn matrices(&self) -> Box<dyn Iterator<Item = &DMatrix<f64>> + '_> {
        match self {
            Schedule::Constant(m) => Box::new(std::iter::once(m)),
            Schedule::PerStep(ms) => Box::new(ms.iter()),
        }
    }

    fn shape(&self) -> Option<(usize, usize)> {
        self.matrices().next().map(|m| m.shape())
    }

    fn check(&self, context: &'static str, rows: Option<usize>, cols: usize, horizon: usize) -> Result<()> {
        if let Some(len) = self.len() {
            if len < horizon {
                return Err(Error::TimeRange(format!(
                    "{context} schedule has {len} steps, horizon needs {horizon}"
                )));
            }
        }
        for m in self.matrices() {
            if m.ncols() != cols {
                return Err(Error::DimensionMismatch {
                    context,
                    expected: cols,
                    actual: m.ncols(),
                });
            }
            if let Some(r) = rows {
                if m.nrows() != r {
                    return Err(Error::DimensionMismatch {
                        context,
                        expected: r,
                        actual: m.nrows(),
                    });
                }
            }
            if m.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument(format!("{context} contains non-finite entries")));
            }
        }
        Ok(())
    }
}

/// Minimum eigenvalue accepted for process noise covariances.
pub const PSD_SLACK: f64 = -1e-12;

/// Time-varying linearized error system over a finite horizon.
///
/// `F_t` and `Q_t` are defined for `t < horizon`, so `Phi(t, 0)` exists for
/// `t <= horizon`. Transition products from the origin are memoized once on
/// first use and are safe to read from many threads.
#[derive(Debug)]
pub struct ErrorSystem {
    factors: FactorStructure,
    transitions: Schedule,
    process_noise: Schedule,
    horizon: usize,
    from_origin: OnceLock<Vec<DMatrix<f64>>>,
}

impl Clone for ErrorSystem {
    fn clone(&self) -> Self {
        Self {
            factors: self.factors.clone(),
            transitions: self.transitions.clone(),
            process_noise: self.process_noise.clone(),
            horizon: self.horizon,
            from_origin: self.from_origin.clone(),
        }
    }
}

impl ErrorSystem {
    pub fn new(
        factors: FactorStructure,
        transitions: Schedule,
        process_noise: Schedule,
        horizon: usize,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        let n = factors.total_dim();
        transitions.check("transition", Some(n), n, horizon)?;
        process_noise.check("process noise", Some(n), n, horizon)?;
        for q in process_noise.matrices() {
            if (q - q.transpose()).norm() > 1e-12 * q.norm().max(1.0) {
                return Err(Error::InvalidArgument("process noise is not symmetric".into()));
            }
            if linalg::min_eigenvalue(q) < PSD_SLACK {
                return Err(Error::InvalidArgument(
                    "process noise is not positive semidefinite".into(),
                ));
            }
        }
        Ok(Self {
            factors,
            transitions,
            process_noise,
            horizon,
            from_origin: OnceLock::new(),
        })
    }

    /// Time-invariant system with zero process noise.
    pub fn constant(factors: FactorStructure, f: DMatrix<f64>, horizon: usize) -> Result<Self> {
        let n = factors.total_dim();
        Self::new(
            factors,
            Schedule::Constant(f),
            Schedule::Constant(DMatrix::zeros(n, n)),
            horizon,
        )
    }

    pub fn factors(&self) -> &FactorStructure {
        &self.factors
    }

    pub fn dim(&self) -> usize {
        self.factors.total_dim()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn transition_at(&self, t: usize) -> Result<&DMatrix<f64>> {
        if t >= self.horizon {
            return Err(Error::TimeRange(format!("F_{t} beyond horizon {}", self.horizon)));
        }
        Ok(self.transitions.at(t).expect("validated schedule"))
    }

    pub fn process_noise_at(&self, t: usize) -> Result<&DMatrix<f64>> {
        if t >= self.horizon {
            return Err(Error::TimeRange(format!("Q_{t} beyond horizon {}", self.horizon)));
        }
        Ok(self.process_noise.at(t).expect("validated schedule"))
    }

    fn origin_table(&self) -> &[DMatrix<f64>] {
        self.from_origin.get_or_init(|| {
            let n = self.dim();
            let mut table = Vec::with_capacity(self.horizon + 1);
            let mut phi = DMatrix::identity(n, n);
            table.push(phi.clone());
            for t in 0..self.horizon {
                phi = self.transitions.at(t).expect("validated schedule") * phi;
                table.push(phi.clone());
            }
            table
        })
    }

    /// `Phi(t, 0) = F_{t-1} ... F_0`.
    pub fn transition_from_origin(&self, t: usize) -> Result<&DMatrix<f64>> {
        if t > self.horizon {
            return Err(Error::TimeRange(format!("Phi({t}, 0) beyond horizon {}", self.horizon)));
        }
        Ok(&self.origin_table()[t])
    }

    /// `Phi(t, tau) = F_{t-1} ... F_tau`, identity when `t == tau`.
    pub fn transition(&self, t: usize, tau: usize) -> Result<DMatrix<f64>> {
        if t < tau {
            return Err(Error::TimeRange(format!("Phi({t}, {tau}) requires t >= tau")));
        }
        if tau == 0 {
            return self.transition_from_origin(t).cloned();
        }
        if t > self.horizon {
            return Err(Error::TimeRange(format!(
                "Phi({t}, {tau}) beyond horizon {}",
                self.horizon
            )));
        }
        let n = self.dim();
        Ok((tau..t).fold(DMatrix::identity(n, n), |acc, s| {
            self.transitions.at(s).expect("validated schedule") * acc
        }))
    }

    /// `Pi_j Phi(t, 0) iota_i`.
    pub fn cross_block(&self, j: usize, i: usize, t: usize) -> Result<DMatrix<f64>> {
        self.factors.block(self.transition_from_origin(t)?, j, i)
    }

    pub fn check_channel(&self, ch: &Channel, horizon: usize) -> Result<()> {
        if horizon > self.horizon {
            return Err(Error::TimeRange(format!(
                "horizon {horizon} exceeds system horizon {}",
                self.horizon
            )));
        }
        if ch.state_dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "channel state dimension",
                expected: self.dim(),
                actual: ch.state_dim(),
            });
        }
        if let Some(len) = ch.measurement.len() {
            if len < horizon {
                return Err(Error::TimeRange(format!(
                    "channel `{}` has {len} steps, horizon needs {horizon}",
                    ch.name
                )));
            }
        }
        if let Some(loc) = &ch.locality {
            if loc.factor >= self.factors.count() || ch.factor_dims != self.factors.dims() {
                return Err(Error::InvalidArgument(format!(
                    "channel `{}` was built for a different factor structure",
                    ch.name
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Locality {
    pub factor: usize,
    pub local: Schedule,
}

/// One observation channel `dy = H_t dx + v`, `v ~ N(0, R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    name: String,
    measurement: Schedule,
    noise: DMatrix<f64>,
    noise_inv: DMatrix<f64>,
    whitener: DMatrix<f64>,
    locality: Option<Locality>,
    factor_dims: Vec<usize>,
    state_dim: usize,
}

impl Channel {
    pub fn new(name: impl Into<String>, measurement: Schedule, noise: DMatrix<f64>) -> Result<Self> {
        let name = name.into();
        let (p, n) = measurement
            .shape()
            .ok_or_else(|| Error::InvalidArgument(format!("channel `{name}` has no steps")))?;
        measurement.check("measurement", Some(p), n, 0)?;
        if noise.shape() != (p, p) {
            return Err(Error::DimensionMismatch {
                context: "measurement noise",
                expected: p,
                actual: noise.nrows(),
            });
        }
        if (&noise - noise.transpose()).norm() > 1e-12 * noise.norm().max(1.0) {
            return Err(Error::InvalidArgument("measurement noise is not symmetric".into()));
        }
        let chol = linalg::cholesky(&noise, "measurement noise")?;
        let l_inv = chol
            .l()
            .solve_lower_triangular(&DMatrix::identity(p, p))
            .ok_or(Error::NotPositiveDefinite("measurement noise"))?;
        Ok(Self {
            name,
            measurement,
            noise_inv: linalg::symmetrize(&chol.inverse()),
            noise,
            whitener: l_inv,
            locality: None,
            factor_dims: Vec::new(),
            state_dim: n,
        })
    }

    /// Channel whose operator is `H_t = local_t Pi_factor`.
    pub fn factor_local(
        name: impl Into<String>,
        factors: &FactorStructure,
        factor: usize,
        local: Schedule,
        noise: DMatrix<f64>,
    ) -> Result<Self> {
        let full = match &local {
            Schedule::Constant(m) => Schedule::Constant(factors.embed_columns(m, factor)?),
            Schedule::PerStep(ms) => Schedule::PerStep(
                ms.iter()
                    .map(|m| factors.embed_columns(m, factor))
                    .collect::<Result<_>>()?,
            ),
        };
        let mut ch = Self::new(name, full, noise)?;
        ch.locality = Some(Locality { factor, local });
        ch.factor_dims = factors.dims().to_vec();
        Ok(ch)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn output_dim(&self) -> usize {
        self.noise.nrows()
    }

    pub fn noise(&self) -> &DMatrix<f64> {
        &self.noise
    }

    pub fn locality(&self) -> Option<&Locality> {
        self.locality.as_ref()
    }

    pub fn measurement(&self) -> &Schedule {
        &self.measurement
    }

    pub fn measurement_at(&self, t: usize) -> Result<&DMatrix<f64>> {
        self.measurement
            .at(t)
            .ok_or_else(|| Error::TimeRange(format!("channel `{}` undefined at t = {t}", self.name)))
    }

    pub fn local_at(&self, t: usize) -> Result<&DMatrix<f64>> {
        let loc = self
            .locality
            .as_ref()
            .ok_or_else(|| Error::NotFactorLocal(self.name.clone()))?;
        loc.local
            .at(t)
            .ok_or_else(|| Error::TimeRange(format!("channel `{}` undefined at t = {t}", self.name)))
    }

    /// `H_t^T R^{-1} H_t`.
    pub fn information(&self, t: usize) -> Result<DMatrix<f64>> {
        let h = self.measurement_at(t)?;
        Ok(linalg::symmetrize(&(h.transpose() * &self.noise_inv * h)))
    }

    /// `R^{-1}`.
    pub fn noise_inverse(&self) -> &DMatrix<f64> {
        &self.noise_inv
    }

    /// `L^{-1} H_t` with `R = L L^T`, so that its Gram matrix is the information.
    pub fn whitened(&self, t: usize) -> Result<DMatrix<f64>> {
        Ok(&self.whitener * self.measurement_at(t)?)
    }
}

/// `S_t = sum_k H_t^(k)T R_k^-1 H_t^(k)`.
pub fn spatial_information(channels: &[Channel], n: usize, t: usize) -> Result<DMatrix<f64>> {
    channels
        .iter()
        .try_fold(DMatrix::zeros(n, n), |acc, ch| Ok(acc + ch.information(t)?))
}
