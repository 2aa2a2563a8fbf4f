//! SE(2) unicycle and SE(3) navigation case studies.
//!
//! Each step applies the body-frame increment `g_t = exp(u_t dt)`; the
//! left-invariant error then propagates through `F_t = Ad(g_t^{-1})`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::filter::{self, BeliefState, DecompositionRecord};
use crate::gramian::{cross_factor_analysis, gramian, unobservable_subspace, CouplingVerdict};
use crate::lie::{adjoint, exp_map, GroupKind};
use crate::linalg::{self, RankTolerance};
use crate::system::{spatial_information, Channel, ErrorSystem, FactorStructure, Schedule};

pub const SE2_DT: f64 = 0.1;
pub const SE2_HORIZON: usize = 100;
pub const SE2_SPEED: f64 = 1.0;
pub const SE2_YAW_RATE: f64 = 0.5;
pub const SE2_PROCESS_NOISE: [f64; 3] = [1e-6, 1e-4, 1e-4];
pub const SE2_POSITION_NOISE: f64 = 0.5;
pub const SE2_HEADING_NOISE: f64 = 0.01;
pub const SE2_REDUNDANT_POSITION_NOISE: f64 = 0.5;

pub const SE3_GPS_NOISE: f64 = 0.5;
pub const SE3_ATTITUDE_NOISE: f64 = 0.01;
pub const SE3_PROCESS_NOISE: [f64; 2] = [1e-6, 1e-4];

/// Rotation factor index in both SE(2) and SE(3) layouts.
pub const ROTATION_FACTOR: usize = 0;
pub const TRANSLATION_FACTOR: usize = 1;

pub const PRESET_NAMES: [&str; 6] = ["se2-A", "se2-B", "se2-C", "se3-gps", "se3-gps-att", "se3-gps2"];

/// Body-velocity inputs: `(v, omega)` for SE(2), `(omega, v)` in R^6 for SE(3).
#[derive(Debug, Clone, PartialEq)]
pub enum InputSchedule {
    Constant(Vec<f64>),
    PerStep(Vec<Vec<f64>>),
}

impl InputSchedule {
    fn at(&self, t: usize) -> Option<&[f64]> {
        match self {
            InputSchedule::Constant(u) => Some(u),
            InputSchedule::PerStep(us) => us.get(t).map(Vec::as_slice),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Se2 {
        dt: f64,
        inputs: InputSchedule,
    },
    Se3 {
        dt: f64,
        inputs: InputSchedule,
    },
    /// Arbitrary factored system given by its transition operators.
    Linear {
        factors: FactorStructure,
        transitions: Schedule,
    },
}

impl Model {
    pub fn factors(&self) -> FactorStructure {
        match self {
            Model::Se2 { .. } => FactorStructure::new(GroupKind::SE2.factor_dims()).unwrap(),
            Model::Se3 { .. } => FactorStructure::new(GroupKind::SE3.factor_dims()).unwrap(),
            Model::Linear { factors, .. } => factors.clone(),
        }
    }
}

/// Named motion profiles for the navigation models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Motion {
    Nominal,
    Hover,
    Translate,
    /// Translate along x, then along y from input index `at` onward.
    Switch {
        at: usize,
    },
}

impl Motion {
    pub fn label(&self) -> String {
        match self {
            Motion::Nominal => "nominal".into(),
            Motion::Hover => "hover".into(),
            Motion::Translate => "translate".into(),
            Motion::Switch { at } => format!("two-axis@{at}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub name: String,
    pub model: Model,
    pub horizon: usize,
    pub process_noise: Schedule,
    pub sensors: Vec<Channel>,
    pub initial_covariance: DMatrix<f64>,
}

fn diag(values: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(values))
}

fn increments(kind: &GroupKind, dt: f64, inputs: &InputSchedule, horizon: usize) -> Result<Vec<DMatrix<f64>>> {
    if dt.is_nan() || dt <= 0.0 {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let width = match kind {
        GroupKind::SE2 => 2,
        _ => kind.dim(),
    };
    (0..horizon)
        .map(|t| {
            let u = inputs
                .at(t)
                .ok_or_else(|| Error::TimeRange(format!("no input for step {t}")))?;
            if u.len() != width {
                return Err(Error::DimensionMismatch {
                    context: "velocity input",
                    expected: width,
                    actual: u.len(),
                });
            }
            let xi: Vec<f64> = match kind {
                // (v, omega) -> [theta, x, y]
                GroupKind::SE2 => vec![u[1] * dt, u[0] * dt, 0.0],
                _ => u.iter().map(|x| x * dt).collect(),
            };
            Ok(adjoint(&exp_map(&xi, kind)?.inverse()))
        })
        .collect()
}

/// Unicycle error system on SE(2) in `[theta, x, y]` coordinates.
pub fn build_se2_system(
    dt: f64,
    inputs: &InputSchedule,
    process_noise: Schedule,
    horizon: usize,
) -> Result<ErrorSystem> {
    let f = increments(&GroupKind::SE2, dt, inputs, horizon)?;
    ErrorSystem::new(
        FactorStructure::new(GroupKind::SE2.factor_dims())?,
        Schedule::PerStep(f),
        process_noise,
        horizon,
    )
}

/// Navigation error system on SE(3) in `[omega, v]` coordinates.
pub fn build_se3_system(
    dt: f64,
    inputs: &InputSchedule,
    process_noise: Schedule,
    horizon: usize,
) -> Result<ErrorSystem> {
    let f = increments(&GroupKind::SE3, dt, inputs, horizon)?;
    ErrorSystem::new(
        FactorStructure::new(GroupKind::SE3.factor_dims())?,
        Schedule::PerStep(f),
        process_noise,
        horizon,
    )
}

/// Standard sensor constructors for the two case studies.
pub mod sensors {
    use super::*;

    fn local(name: &str, factors: &FactorStructure, factor: usize, dim: usize, noise: f64) -> Channel {
        Channel::factor_local(
            name,
            factors,
            factor,
            Schedule::Constant(DMatrix::identity(dim, dim)),
            DMatrix::identity(dim, dim) * noise,
        )
        .expect("static sensor definition")
    }

    fn se2() -> FactorStructure {
        FactorStructure::new(GroupKind::SE2.factor_dims()).unwrap()
    }

    fn se3() -> FactorStructure {
        FactorStructure::new(GroupKind::SE3.factor_dims()).unwrap()
    }

    pub fn se2_position() -> Channel {
        local("position", &se2(), TRANSLATION_FACTOR, 2, SE2_POSITION_NOISE)
    }

    pub fn se2_heading() -> Channel {
        local("heading", &se2(), ROTATION_FACTOR, 1, SE2_HEADING_NOISE)
    }

    pub fn se2_redundant_position() -> Channel {
        local("position2", &se2(), TRANSLATION_FACTOR, 2, SE2_REDUNDANT_POSITION_NOISE)
    }

    pub fn se3_gps() -> Channel {
        local("gps", &se3(), TRANSLATION_FACTOR, 3, SE3_GPS_NOISE)
    }

    pub fn se3_attitude() -> Channel {
        local("attitude", &se3(), ROTATION_FACTOR, 3, SE3_ATTITUDE_NOISE)
    }

    pub fn se3_redundant_gps() -> Channel {
        local("gps2", &se3(), TRANSLATION_FACTOR, 3, SE3_GPS_NOISE)
    }

    /// Looks up a standard sensor by name for the given model family.
    pub fn by_name(name: &str, model: &Model) -> Option<Channel> {
        match (model, name) {
            (Model::Se2 { .. }, "position" | "gps") => Some(se2_position()),
            (Model::Se2 { .. }, "heading" | "compass") => Some(se2_heading()),
            (Model::Se2 { .. }, "position2") => Some(se2_redundant_position()),
            (Model::Se3 { .. }, "gps" | "position") => Some(se3_gps()),
            (Model::Se3 { .. }, "attitude") => Some(se3_attitude()),
            (Model::Se3 { .. }, "gps2") => Some(se3_redundant_gps()),
            _ => None,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        let n = self.model.factors().total_dim();
        if self.initial_covariance.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                context: "initial covariance",
                expected: n,
                actual: self.initial_covariance.nrows(),
            });
        }
        BeliefState::new(self.initial_covariance.clone(), 0)?;
        Ok(())
    }

    pub fn build_system(&self) -> Result<ErrorSystem> {
        self.validate()?;
        let sys = match &self.model {
            Model::Se2 { dt, inputs } => build_se2_system(*dt, inputs, self.process_noise.clone(), self.horizon)?,
            Model::Se3 { dt, inputs } => build_se3_system(*dt, inputs, self.process_noise.clone(), self.horizon)?,
            Model::Linear { factors, transitions } => ErrorSystem::new(
                factors.clone(),
                transitions.clone(),
                self.process_noise.clone(),
                self.horizon,
            )?,
        };
        for ch in &self.sensors {
            sys.check_channel(ch, self.horizon)?;
        }
        Ok(sys)
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = horizon;
        self
    }

    /// Replaces the velocity inputs with a named motion profile.
    pub fn with_motion(mut self, motion: Motion) -> Result<Self> {
        self.model = match self.model {
            Model::Se2 { dt, .. } => {
                let u = match motion {
                    Motion::Nominal => vec![SE2_SPEED, SE2_YAW_RATE],
                    Motion::Hover => vec![0.0, 0.0],
                    Motion::Translate => vec![SE2_SPEED, 0.0],
                    Motion::Switch { .. } => {
                        return Err(Error::InvalidArgument(
                            "two-axis motion is defined for SE(3) models only".into(),
                        ))
                    }
                };
                Model::Se2 {
                    dt,
                    inputs: InputSchedule::Constant(u),
                }
            }
            Model::Se3 { dt, .. } => {
                let along = |axis: usize| {
                    let mut u = vec![0.0; 6];
                    u[3 + axis] = 1.0;
                    u
                };
                let inputs = match motion {
                    Motion::Nominal | Motion::Translate => InputSchedule::Constant(along(0)),
                    Motion::Hover => InputSchedule::Constant(vec![0.0; 6]),
                    Motion::Switch { at } => {
                        InputSchedule::PerStep((0..self.horizon).map(|t| along(if t < at { 0 } else { 1 })).collect())
                    }
                };
                Model::Se3 { dt, inputs }
            }
            Model::Linear { .. } => {
                return Err(Error::InvalidArgument(
                    "motion profiles need an SE(2)/SE(3) model".into(),
                ))
            }
        };
        Ok(self)
    }
}

fn se2_config(name: &str, sensors: Vec<Channel>) -> ScenarioConfig {
    ScenarioConfig {
        name: name.into(),
        model: Model::Se2 {
            dt: SE2_DT,
            inputs: InputSchedule::Constant(vec![SE2_SPEED, SE2_YAW_RATE]),
        },
        horizon: SE2_HORIZON,
        process_noise: Schedule::Constant(diag(&SE2_PROCESS_NOISE)),
        sensors,
        initial_covariance: DMatrix::identity(3, 3),
    }
}

fn se3_config(name: &str, sensors: Vec<Channel>) -> ScenarioConfig {
    let [qr, qt] = SE3_PROCESS_NOISE;
    ScenarioConfig {
        name: name.into(),
        model: Model::Se3 {
            dt: SE2_DT,
            inputs: InputSchedule::Constant(vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0]),
        },
        horizon: SE2_HORIZON,
        process_noise: Schedule::Constant(diag(&[qr, qr, qr, qt, qt, qt])),
        sensors,
        initial_covariance: DMatrix::identity(6, 6),
    }
}

/// Built-in scenario by name (see [`PRESET_NAMES`]).
pub fn preset(name: &str) -> Option<ScenarioConfig> {
    use sensors::*;
    Some(match name {
        "se2-A" => se2_config(name, vec![se2_position()]),
        "se2-B" => se2_config(name, vec![se2_position(), se2_heading()]),
        "se2-C" => se2_config(name, vec![se2_position(), se2_redundant_position()]),
        "se3-gps" => se3_config(name, vec![se3_gps()]),
        "se3-gps-att" => se3_config(name, vec![se3_gps(), se3_attitude()]),
        "se3-gps2" => se3_config(name, vec![se3_gps(), se3_redundant_gps()]),
        _ => return None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub t: usize,
    pub log_det_p: f64,
    pub min_eig_p: f64,
    pub min_eig_j: f64,
    pub trace_p: f64,
    /// Rank of the Gramian over every measurement up to and including `t`.
    pub rank_wo: usize,
    pub record: DecompositionRecord,
}

#[derive(Debug, Clone)]
pub struct ScenarioTrace {
    pub name: String,
    pub steps: Vec<TraceStep>,
    /// Set when the recursion stopped early on a numerical failure.
    pub failure: Option<Error>,
}

/// Deterministic Riccati evolution of a scenario.
///
/// Row `t` is the posterior after the measurement at time `t`; the first row
/// is a pure update of `P0`.
pub fn run_scenario(config: &ScenarioConfig, tol: RankTolerance) -> Result<ScenarioTrace> {
    let sys = config.build_system()?;
    let n = sys.dim();
    let mut belief = BeliefState::new(config.initial_covariance.clone(), 0)?;
    let mut w = DMatrix::zeros(n, n);
    let mut steps = Vec::with_capacity(config.horizon);
    let mut failure = None;

    for t in 0..config.horizon {
        let s = spatial_information(&config.sensors, n, t)?;
        let stepped = if t == 0 {
            filter::update_with_decomposition(&belief, &s)
        } else {
            filter::step_with_decomposition(&belief, sys.transition_at(t - 1)?, sys.process_noise_at(t - 1)?, &s)
        };
        let (posterior, record) = match stepped {
            Ok(v) => v,
            Err(e) => {
                failure = Some(e);
                break;
            }
        };
        let phi = sys.transition_from_origin(t)?;
        w += phi.transpose() * &s * phi;
        let eig = linalg::symmetric_eigenvalues(posterior.covariance());
        let rank_wo = n - linalg::psd_null_space(&w, tol).ncols();
        steps.push(TraceStep {
            t,
            log_det_p: posterior.log_det(),
            min_eig_p: eig[0],
            min_eig_j: 1.0 / eig[n - 1],
            trace_p: posterior.covariance().trace(),
            rank_wo,
            record,
        });
        belief = posterior;
    }
    Ok(ScenarioTrace {
        name: config.name.clone(),
        steps,
        failure,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table2Row {
    pub architecture: &'static str,
    pub motion: &'static str,
    pub unobservable_dim: usize,
    /// Coupling verdict of the primary GPS onto so(3).
    pub rotation_verdict: CouplingVerdict,
}

/// Unobservable dimension of a scenario's full Gramian at its horizon.
pub fn unobservable_dim(config: &ScenarioConfig, tol: RankTolerance) -> Result<usize> {
    let sys = config.build_system()?;
    let w = gramian(&sys, &config.sensors, config.horizon)?;
    Ok(unobservable_subspace(&w, tol).dim())
}

/// The four SE(3) sensor-architecture rows.
pub fn table2_reproduction(tol: RankTolerance) -> Result<Vec<Table2Row>> {
    let rows = [
        ("GPS only", "hovering", "se3-gps", Motion::Hover),
        ("GPS only", "translating", "se3-gps", Motion::Translate),
        ("GPS + attitude", "any motion", "se3-gps-att", Motion::Hover),
        ("Redundant GPS", "translating", "se3-gps2", Motion::Translate),
    ];
    rows.iter()
        .map(|&(architecture, motion_label, name, motion)| {
            let config = preset(name).expect("built-in preset").with_motion(motion)?;
            let sys = config.build_system()?;
            let gps = &config.sensors[0];
            let report = cross_factor_analysis(&sys, gps, ROTATION_FACTOR, config.horizon, tol)?;
            Ok(Table2Row {
                architecture,
                motion: motion_label,
                unobservable_dim: unobservable_dim(&config, tol)?,
                rotation_verdict: report.verdict,
            })
        })
        .collect()
}
