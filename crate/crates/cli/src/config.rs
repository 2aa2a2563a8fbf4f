//! JSON scenario and sensor descriptions.
//!
//! Matrices are row-major nested arrays. A schedule is either a single value
//! or `{"per_step": [...]}`.

use std::path::Path;

use liegram::scenarios::{sensors, InputSchedule, Model, ScenarioConfig};
use liegram::{Channel, FactorStructure, Schedule};
use nalgebra::DMatrix;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum Steps<T> {
    PerStep { per_step: Vec<T> },
    Constant(T),
}

pub type Matrix = Vec<Vec<f64>>;

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelSpec {
    Se2 {
        dt: f64,
        inputs: Steps<Vec<f64>>,
    },
    Se3 {
        dt: f64,
        inputs: Steps<Vec<f64>>,
    },
    Linear {
        factors: Vec<usize>,
        transitions: Steps<Matrix>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    #[serde(default)]
    pub name: Option<String>,
    /// Factor the local `h` acts on; absent means `h` spans the full state.
    #[serde(default)]
    pub factor: Option<usize>,
    pub h: Steps<Matrix>,
    pub r: Matrix,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum SensorSpec {
    Builtin(String),
    Explicit(ChannelSpec),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: Option<String>,
    pub model: ModelSpec,
    pub horizon: usize,
    #[serde(default)]
    pub process_noise: Option<Steps<Matrix>>,
    #[serde(default)]
    pub initial_covariance: Option<Matrix>,
    pub sensors: Vec<SensorSpec>,
}

pub fn matrix(rows: &Matrix, what: &str) -> Result<DMatrix<f64>, CliError> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 {
        return Err(CliError::Input(format!("{what}: empty matrix")));
    }
    if rows.iter().any(|row| row.len() != c) {
        return Err(CliError::Input(format!("{what}: ragged rows")));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn schedule(steps: &Steps<Matrix>, what: &str) -> Result<Schedule, CliError> {
    Ok(match steps {
        Steps::Constant(m) => Schedule::Constant(matrix(m, what)?),
        Steps::PerStep { per_step } => Schedule::PerStep(
            per_step
                .iter()
                .enumerate()
                .map(|(t, m)| matrix(m, &format!("{what}[{t}]")))
                .collect::<Result<_, _>>()?,
        ),
    })
}

fn inputs(steps: Steps<Vec<f64>>) -> InputSchedule {
    match steps {
        Steps::Constant(u) => InputSchedule::Constant(u),
        Steps::PerStep { per_step } => InputSchedule::PerStep(per_step),
    }
}

impl ChannelSpec {
    pub fn build(&self, factors: &FactorStructure, default_name: &str) -> Result<Channel, CliError> {
        let name = self.name.clone().unwrap_or_else(|| default_name.to_string());
        let h = schedule(&self.h, "h")?;
        let r = matrix(&self.r, "r")?;
        let ch = match self.factor {
            Some(i) => Channel::factor_local(name, factors, i, h, r)?,
            None => Channel::new(name, h, r)?,
        };
        Ok(ch)
    }
}

impl SensorSpec {
    pub fn build(&self, model: &Model, default_name: &str) -> Result<Channel, CliError> {
        match self {
            SensorSpec::Builtin(name) => sensors::by_name(name, model)
                .ok_or_else(|| CliError::Input(format!("unknown sensor '{name}' for this model"))),
            SensorSpec::Explicit(spec) => spec.build(&model.factors(), default_name),
        }
    }
}

impl ScenarioSpec {
    pub fn build(self, default_name: &str) -> Result<ScenarioConfig, CliError> {
        let model = match self.model {
            ModelSpec::Se2 { dt, inputs: u } => Model::Se2 { dt, inputs: inputs(u) },
            ModelSpec::Se3 { dt, inputs: u } => Model::Se3 { dt, inputs: inputs(u) },
            ModelSpec::Linear { factors, transitions } => Model::Linear {
                factors: FactorStructure::new(factors)?,
                transitions: schedule(&transitions, "transitions")?,
            },
        };
        let n = model.factors().total_dim();
        let process_noise = match &self.process_noise {
            Some(q) => schedule(q, "process_noise")?,
            None => Schedule::Constant(DMatrix::zeros(n, n)),
        };
        let initial_covariance = match &self.initial_covariance {
            Some(p) => matrix(p, "initial_covariance")?,
            None => DMatrix::identity(n, n),
        };
        let sensors = self
            .sensors
            .iter()
            .enumerate()
            .map(|(k, s)| s.build(&model, &format!("sensor{k}")))
            .collect::<Result<Vec<_>, _>>()?;
        let config = ScenarioConfig {
            name: self.name.unwrap_or_else(|| default_name.to_string()),
            model,
            horizon: self.horizon,
            process_noise,
            sensors,
            initial_covariance,
        };
        config.validate()?;
        Ok(config)
    }
}

/// Parses JSON text, reporting syntax and schema errors with line and column.
pub fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, origin: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        let suffix = format!(" at line {} column {}", e.line(), e.column());
        let msg = msg.strip_suffix(&suffix).unwrap_or(&msg);
        CliError::Input(format!("{origin}:{}:{}: {msg}", e.line(), e.column()))
    })
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let origin = path.display().to_string();
    let spec: ScenarioSpec = parse_json(&text, &origin)?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("config");
    spec.build(stem)
}

/// A sensor argument: a built-in name, inline JSON, or `@path` to a JSON file.
pub fn parse_sensor_arg(arg: &str, model: &Model) -> Result<Channel, CliError> {
    let (text, origin) = if let Some(path) = arg.strip_prefix('@') {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {path}: {e}")))?;
        (text, path.to_string())
    } else if arg.trim_start().starts_with('{') {
        (arg.to_string(), "--sensor".to_string())
    } else {
        return sensors::by_name(arg, model)
            .ok_or_else(|| CliError::Input(format!("unknown sensor '{arg}' for this model")));
    };
    let spec: SensorSpec = parse_json(&text, &origin)?;
    spec.build(model, "candidate")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_forms() {
        let c: Steps<Matrix> = serde_json::from_str("[[1, 0], [0, 1]]").unwrap();
        assert!(matches!(c, Steps::Constant(_)));
        let p: Steps<Matrix> = serde_json::from_str(r#"{"per_step": [[[1]], [[2]]]}"#).unwrap();
        assert_eq!(schedule(&p, "x").unwrap().len(), Some(2));
    }

    #[test]
    fn ragged_matrix_rejected() {
        assert!(matrix(&vec![vec![1.0, 2.0], vec![3.0]], "m").is_err());
        assert!(matrix(&vec![], "m").is_err());
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_json::<ScenarioSpec>("{\n  \"horizon\": ,\n}", "cfg.json").unwrap_err();
        let CliError::Input(msg) = err else { panic!() };
        assert!(msg.starts_with("cfg.json:2:"), "{msg}");
    }

    #[test]
    fn linear_config_builds() {
        let text = r#"{
            "model": {"type": "linear", "factors": [1, 1], "transitions": [[1, 0], [0, 1]]},
            "horizon": 3,
            "sensors": [{"factor": 0, "h": [[1]], "r": [[1]]}]
        }"#;
        let spec: ScenarioSpec = parse_json(text, "t").unwrap();
        let c = spec.build("toy").unwrap();
        assert_eq!(c.name, "toy");
        assert_eq!(c.sensors[0].locality().unwrap().factor, 0);
    }
}
