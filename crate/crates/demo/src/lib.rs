//! Browser bindings. Each export takes plain numbers and returns a JSON
//! string for the page to draw.

use liegram::diversity::{diversity_check, propagated_subspace};
use liegram::gramian::{gramian, reachable_profile};
use liegram::linalg::RankTolerance;
use liegram::scenarios::{
    preset, run_scenario, sensors, InputSchedule, Model, Motion, ScenarioConfig, ROTATION_FACTOR,
};
use liegram::{Channel, Schedule};
use nalgebra::DMatrix;
use serde::Serialize;
use wasm_bindgen::prelude::*;

const MAX_HORIZON: usize = 2000;

#[derive(Debug, Serialize)]
pub struct Curve {
    pub name: String,
    pub log_det_p: Vec<f64>,
    pub min_eig_j: Vec<f64>,
    pub rank: Vec<usize>,
}

fn check_horizon(horizon: usize) -> Result<(), String> {
    if horizon == 0 || horizon > MAX_HORIZON {
        return Err(format!("horizon must be between 1 and {MAX_HORIZON}"));
    }
    Ok(())
}

fn se2_scenario(name: &str, speed: f64, yaw_rate: f64, horizon: usize) -> Result<ScenarioConfig, String> {
    let mut c = preset(name).ok_or("missing preset")?.with_horizon(horizon);
    if let Model::Se2 { dt, .. } = c.model {
        c.model = Model::Se2 {
            dt,
            inputs: InputSchedule::Constant(vec![speed, yaw_rate]),
        };
    }
    Ok(c)
}

/// `log det P`, `lambda_min(J)` and Gramian rank for the three SE(2) scenarios.
pub fn se2_curves(speed: f64, yaw_rate: f64, horizon: usize) -> Result<Vec<Curve>, String> {
    check_horizon(horizon)?;
    if !(speed.is_finite() && yaw_rate.is_finite()) {
        return Err("inputs must be finite".into());
    }
    ["se2-A", "se2-B", "se2-C"]
        .iter()
        .map(|name| {
            let config = se2_scenario(name, speed, yaw_rate, horizon)?;
            let trace = run_scenario(&config, RankTolerance::default()).map_err(|e| e.to_string())?;
            Ok(Curve {
                name: name.to_string(),
                log_det_p: trace.steps.iter().map(|s| s.log_det_p).collect(),
                min_eig_j: trace.steps.iter().map(|s| s.min_eig_j).collect(),
                rank: trace.steps.iter().map(|s| s.rank_wo).collect(),
            })
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct AttitudeProfile {
    /// Reachable so(3) dimension for T = 1..=horizon.
    pub reachable: Vec<usize>,
    pub index: Option<usize>,
    /// Unobservable dimension of the full GPS-only Gramian at the horizon.
    pub unobservable_dim: usize,
}

/// GPS-only SE(3) observability for a body velocity that turns from the x
/// axis to the y axis at `switch_step` (1-based; 0 keeps x throughout).
pub fn se3_attitude_profile(speed: f64, switch_step: usize, horizon: usize) -> Result<AttitudeProfile, String> {
    check_horizon(horizon)?;
    let motion = match (speed == 0.0, switch_step) {
        (true, _) => Motion::Hover,
        (false, 0) => Motion::Translate,
        (false, k) => Motion::Switch { at: k - 1 },
    };
    let mut config = preset("se3-gps")
        .ok_or("missing preset")?
        .with_horizon(horizon)
        .with_motion(motion)
        .map_err(|e| e.to_string())?;
    if let Model::Se3 { dt, inputs } = &config.model {
        let scale = |u: &Vec<f64>| u.iter().map(|x| x * speed).collect::<Vec<_>>();
        let inputs = match inputs {
            InputSchedule::Constant(u) => InputSchedule::Constant(scale(u)),
            InputSchedule::PerStep(us) => InputSchedule::PerStep(us.iter().map(scale).collect()),
        };
        config.model = Model::Se3 { dt: *dt, inputs };
    }
    let tol = RankTolerance::default();
    let sys = config.build_system().map_err(|e| e.to_string())?;
    let gps = &config.sensors[0];
    let reachable = reachable_profile(&sys, gps, ROTATION_FACTOR, horizon, tol).map_err(|e| e.to_string())?;
    let w = gramian(&sys, &config.sensors, horizon).map_err(|e| e.to_string())?;
    Ok(AttitudeProfile {
        index: reachable.iter().position(|&d| d == 3).map(|k| k + 1),
        reachable,
        unobservable_dim: sys.dim() - w.rank(tol),
    })
}

#[derive(Debug, Serialize)]
pub struct DiversityResult {
    pub redundant: bool,
    pub innovation_dim: usize,
    pub innovation_norm: f64,
    pub epsilon: f64,
}

/// Checks a one-row SE(2) sensor `[h_theta, h_x, h_y]` against the position
/// sensor along the nominal turning trajectory.
pub fn se2_sensor_check(h: [f64; 3], horizon: usize) -> Result<DiversityResult, String> {
    check_horizon(horizon)?;
    let config = se2_scenario("se2-A", 1.0, 0.5, horizon)?;
    let sys = config.build_system().map_err(|e| e.to_string())?;
    let candidate = Channel::new(
        "candidate",
        Schedule::Constant(DMatrix::from_row_slice(1, 3, &h)),
        DMatrix::identity(1, 1),
    )
    .map_err(|e| e.to_string())?;
    let base = [sensors::se2_position()];
    let span = propagated_subspace(&sys, &base, horizon, RankTolerance::default()).map_err(|e| e.to_string())?;
    let check = diversity_check(&sys, &span, &candidate, None).map_err(|e| e.to_string())?;
    Ok(DiversityResult {
        redundant: check.is_redundant(),
        innovation_dim: check.innovation_dim(),
        innovation_norm: check.innovation_norm,
        epsilon: check.epsilon,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    r.map(|v| serde_json::to_string(&v).expect("serializable"))
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn simulate_se2(speed: f64, yaw_rate: f64, horizon: usize) -> Result<String, JsError> {
    to_js(se2_curves(speed, yaw_rate, horizon))
}

#[wasm_bindgen]
pub fn se3_observability(speed: f64, switch_step: usize, horizon: usize) -> Result<String, JsError> {
    to_js(se3_attitude_profile(speed, switch_step, horizon))
}

#[wasm_bindgen]
pub fn check_se2_sensor(h_theta: f64, h_x: f64, h_y: f64, horizon: usize) -> Result<String, JsError> {
    to_js(se2_sensor_check([h_theta, h_x, h_y], horizon))
}
