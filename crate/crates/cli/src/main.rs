//! `liegram`: run scenario traces, analyze cross-factor observability and
//! check candidate sensors for structural redundancy.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use liegram::diversity::{diversity_check, gramian_increment, propagated_subspace};
use liegram::gramian::{cross_factor_analysis, gramian, observability_index, unobservable_subspace};
use liegram::linalg::RankTolerance;
use liegram::scenarios::{
    preset, run_scenario, table2_reproduction, Motion, ScenarioConfig, ScenarioTrace, PRESET_NAMES, ROTATION_FACTOR,
};
use nalgebra::DMatrix;
use serde::Serialize;

use output::{fmt_g, round_sig, to_json, RunManifest};

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) | CliError::Io(m) => f.write_str(m),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<liegram::Error> for CliError {
    fn from(e: liegram::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

fn numerical(e: liegram::Error) -> CliError {
    match e {
        liegram::Error::NotPositiveDefinite(_) | liegram::Error::Singularity { .. } => {
            CliError::Numerical(e.to_string())
        }
        other => other.into(),
    }
}

#[derive(Parser)]
#[command(name = "liegram", version, about = "Structural observability on matrix Lie groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the covariance recursion and write trace.csv (and plot.svg).
    Simulate(SimulateArgs),
    /// Cross-factor observability report as JSON.
    Analyze(AnalyzeArgs),
    /// Structural redundancy check for a candidate sensor.
    CheckSensor(CheckSensorArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MotionArg {
    Nominal,
    Hover,
    Translate,
    TwoAxis,
}

#[derive(Args)]
struct Source {
    /// Built-in scenario name (repeatable for simulate).
    #[arg(long)]
    preset: Vec<String>,
    /// Scenario description in JSON.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override the scenario horizon.
    #[arg(long, value_name = "N")]
    horizon: Option<usize>,
    /// Replace the velocity inputs with a named motion profile.
    #[arg(long, value_enum)]
    motion: Option<MotionArg>,
    /// Step (1-based) at which `two-axis` motion turns onto the y axis.
    #[arg(long, default_value_t = 5, value_name = "N")]
    switch_step: usize,
    /// Absolute floor of the rank tolerance.
    #[arg(long, value_name = "X")]
    tolerance: Option<f64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: Source,
    /// Run every built-in preset.
    #[arg(long)]
    all_presets: bool,
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Also write a log det P line plot.
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    source: Source,
    /// Print the four SE(3) sensor-architecture rows.
    #[arg(long)]
    table2: bool,
    /// Print the architecture row (primary sensor onto rotation) for the source.
    #[arg(long)]
    table_row: bool,
    /// Factor the analyzed sensor is local to (default: first sensor's factor).
    #[arg(long, value_name = "I")]
    factor_from: Option<usize>,
    /// Factor whose observability is analyzed.
    #[arg(long, value_name = "J", default_value_t = 0)]
    factor_to: usize,
    /// Emit JSON for --table2 instead of a text table.
    #[arg(long)]
    json: bool,
    /// Also write the report into this directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckSensorArgs {
    #[command(flatten)]
    source: Source,
    /// Candidate: built-in name, inline JSON, or @file.json.
    #[arg(long)]
    sensor: String,
    /// Redundancy threshold; default is relative to the candidate's scale.
    #[arg(long, value_name = "X")]
    epsilon: Option<f64>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

fn tolerance(source: &Source) -> Result<RankTolerance, CliError> {
    match source.tolerance {
        None => Ok(RankTolerance::default()),
        Some(x) if x >= 0.0 && x.is_finite() => Ok(RankTolerance::with_floor(x)),
        Some(x) => Err(CliError::Input(format!("tolerance must be non-negative, got {x}"))),
    }
}

fn motion(source: &Source) -> Result<Option<Motion>, CliError> {
    Ok(match source.motion {
        None => None,
        Some(MotionArg::Nominal) => Some(Motion::Nominal),
        Some(MotionArg::Hover) => Some(Motion::Hover),
        Some(MotionArg::Translate) => Some(Motion::Translate),
        Some(MotionArg::TwoAxis) => {
            if source.switch_step == 0 {
                return Err(CliError::Input("--switch-step is 1-based".into()));
            }
            Some(Motion::Switch {
                at: source.switch_step - 1,
            })
        }
    })
}

fn adjust(mut config: ScenarioConfig, source: &Source) -> Result<ScenarioConfig, CliError> {
    if let Some(h) = source.horizon {
        if h == 0 {
            return Err(CliError::Input("--horizon must be at least 1".into()));
        }
        config = config.with_horizon(h);
    }
    if let Some(m) = motion(source)? {
        config = config.with_motion(m)?;
    }
    config.build_system()?;
    Ok(config)
}

fn named_preset(name: &str) -> Result<ScenarioConfig, CliError> {
    preset(name).ok_or_else(|| CliError::Input(format!("unknown preset '{name}' (known: {})", PRESET_NAMES.join(", "))))
}

/// Resolves every requested scenario before anything is written.
fn scenarios(source: &Source, all_presets: bool) -> Result<Vec<ScenarioConfig>, CliError> {
    let mut configs = Vec::new();
    let names: Vec<&str> = if all_presets {
        PRESET_NAMES.to_vec()
    } else {
        source.preset.iter().map(String::as_str).collect()
    };
    for name in names {
        configs.push(adjust(named_preset(name)?, source)?);
    }
    if let Some(path) = &source.config {
        configs.push(adjust(config::load_scenario(path)?, source)?);
    }
    if configs.is_empty() {
        return Err(CliError::Input("give --preset, --all-presets or --config".into()));
    }
    Ok(configs)
}

fn single_scenario(source: &Source) -> Result<ScenarioConfig, CliError> {
    let mut configs = scenarios(source, false)?;
    if configs.len() != 1 {
        return Err(CliError::Input("this command takes exactly one scenario".into()));
    }
    Ok(configs.remove(0))
}

fn source_labels(source: &Source, all_presets: bool) -> Vec<String> {
    let mut v: Vec<String> = if all_presets {
        PRESET_NAMES.iter().map(|s| s.to_string()).collect()
    } else {
        source.preset.clone()
    };
    if let Some(p) = &source.config {
        v.push(p.display().to_string());
    }
    v
}

fn simulate(args: &SimulateArgs) -> Result<String, CliError> {
    let tol = tolerance(&args.source)?;
    let configs = scenarios(&args.source, args.all_presets)?;
    let results: Vec<liegram::Result<ScenarioTrace>> = std::thread::scope(|s| {
        let handles: Vec<_> = configs.iter().map(|c| s.spawn(move || run_scenario(c, tol))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scenario thread"))
            .collect()
    });
    let traces = results
        .into_iter()
        .collect::<liegram::Result<Vec<_>>>()
        .map_err(numerical)?;

    let mut files = vec![("trace.csv".to_string(), output::trace_csv(&traces))];
    if traces.len() > 1 {
        for tr in &traces {
            files.push((
                format!("trace_{}.csv", tr.name),
                output::trace_csv(std::slice::from_ref(tr)),
            ));
        }
    }
    if args.svg {
        files.push(("plot.svg".to_string(), output::log_det_svg(&traces)));
    }
    let manifest = RunManifest {
        command: "simulate".into(),
        source: source_labels(&args.source, args.all_presets),
        out_dir: args.out.display().to_string(),
        tolerance: args.source.tolerance,
        epsilon: None,
        files: Vec::new(),
    };
    output::write_artifacts(&args.out, &files, manifest)?;

    let mut summary = String::new();
    for tr in &traces {
        let last = tr.steps.last();
        summary.push_str(&format!(
            "{}: {} steps, final log det P {}, rank {}\n",
            tr.name,
            tr.steps.len(),
            last.map_or("-".into(), |s| fmt_g(s.log_det_p)),
            last.map_or(0, |s| s.rank_wo)
        ));
    }
    if let Some((tr, e)) = traces.iter().find_map(|t| t.failure.as_ref().map(|e| (t, e))) {
        return Err(CliError::Numerical(format!(
            "{} stopped after {} steps: {e} (partial trace written to {})",
            tr.name,
            tr.steps.len(),
            args.out.display()
        )));
    }
    Ok(summary)
}

fn columns(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.ncols())
        .map(|c| m.column(c).iter().map(|&x| round_sig(x)).collect())
        .collect()
}

#[derive(Serialize)]
struct AnalyzeReport {
    scenario: String,
    horizon: usize,
    sensor: String,
    measured_factor: usize,
    target_factor: usize,
    verdict: &'static str,
    reachable_dim: usize,
    /// Columns of the orthonormal basis, in target-factor coordinates.
    reachable_basis: Vec<Vec<f64>>,
    unobservable_dim: usize,
    unobservable_basis: Vec<Vec<f64>>,
    observability_index: Option<usize>,
    persistently_exciting: bool,
    pe_deficient_dim: usize,
    positive_on_reachable: bool,
    restricted_min_eigenvalue: Option<f64>,
    gramian_rank: usize,
    gramian_unobservable_basis: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct TableRow {
    architecture: String,
    motion: String,
    unobservable_dim: usize,
    rotation_verdict: &'static str,
}

fn table2_text(table: &[TableRow]) -> String {
    let mut s = format!(
        "{:<16} {:<12} {:>16} {:>10}\n",
        "architecture", "motion", "unobservable_dim", "verdict"
    );
    for r in table {
        s.push_str(&format!(
            "{:<16} {:<12} {:>16} {:>10}\n",
            r.architecture, r.motion, r.unobservable_dim, r.rotation_verdict
        ));
    }
    s
}

fn analyze(args: &AnalyzeArgs) -> Result<String, CliError> {
    let tol = tolerance(&args.source)?;
    let (text, name) = if args.table2 {
        let table: Vec<TableRow> = table2_reproduction(tol)
            .map_err(numerical)?
            .into_iter()
            .map(|r| TableRow {
                architecture: r.architecture.into(),
                motion: r.motion.into(),
                unobservable_dim: r.unobservable_dim,
                rotation_verdict: r.rotation_verdict.as_str(),
            })
            .collect();
        if args.json {
            (to_json(&table), "table2.json")
        } else {
            (table2_text(&table), "table2.txt")
        }
    } else {
        let config = single_scenario(&args.source)?;
        let sys = config.build_system()?;
        if args.table_row {
            let primary = config
                .sensors
                .first()
                .ok_or_else(|| CliError::Input("scenario has no sensors".into()))?;
            let report =
                cross_factor_analysis(&sys, primary, ROTATION_FACTOR, config.horizon, tol).map_err(numerical)?;
            let w = gramian(&sys, &config.sensors, config.horizon)?;
            let row = TableRow {
                architecture: config.name.clone(),
                motion: args.source.motion.map_or("config", |m| motion_label(m)).into(),
                unobservable_dim: unobservable_subspace(&w, tol).dim(),
                rotation_verdict: report.verdict.as_str(),
            };
            (to_json(&row), "table_row.json")
        } else {
            (to_json(&analyze_report(&config, args, tol)?), "report.json")
        }
    };
    if let Some(dir) = &args.out {
        let manifest = RunManifest {
            command: "analyze".into(),
            source: source_labels(&args.source, false),
            out_dir: dir.display().to_string(),
            tolerance: args.source.tolerance,
            epsilon: None,
            files: Vec::new(),
        };
        output::write_artifacts(dir, &[(name.to_string(), text.clone())], manifest)?;
    }
    Ok(text)
}

fn motion_label(m: MotionArg) -> &'static str {
    match m {
        MotionArg::Nominal => "nominal",
        MotionArg::Hover => "hover",
        MotionArg::Translate => "translate",
        MotionArg::TwoAxis => "two-axis",
    }
}

fn analyze_report(config: &ScenarioConfig, args: &AnalyzeArgs, tol: RankTolerance) -> Result<AnalyzeReport, CliError> {
    let sys = config.build_system()?;
    let count = sys.factors().count();
    for (flag, idx) in [
        ("--factor-to", Some(args.factor_to)),
        ("--factor-from", args.factor_from),
    ] {
        if let Some(i) = idx {
            if i >= count {
                return Err(CliError::Input(format!(
                    "{flag} {i} out of range: system has {count} factors"
                )));
            }
        }
    }
    let sensor = config
        .sensors
        .iter()
        .find(|ch| match (ch.locality(), args.factor_from) {
            (Some(l), Some(i)) => l.factor == i,
            (Some(_), None) => true,
            (None, _) => false,
        })
        .ok_or_else(|| CliError::Input("no factor-local sensor on the requested factor".into()))?;
    let report = cross_factor_analysis(&sys, sensor, args.factor_to, config.horizon, tol).map_err(numerical)?;
    let index = observability_index(&sys, sensor, args.factor_to, config.horizon, tol).map_err(numerical)?;
    let w = gramian(&sys, &config.sensors, config.horizon)?;
    let hidden = unobservable_subspace(&w, tol);
    let missing = report.reachable.complement();
    Ok(AnalyzeReport {
        scenario: config.name.clone(),
        horizon: config.horizon,
        sensor: sensor.name().to_string(),
        measured_factor: report.measured_factor,
        target_factor: report.target_factor,
        verdict: report.verdict.as_str(),
        reachable_dim: report.reachable.dim(),
        reachable_basis: columns(report.reachable.basis()),
        unobservable_dim: missing.dim(),
        unobservable_basis: columns(missing.basis()),
        observability_index: index,
        persistently_exciting: report.persistently_exciting,
        pe_deficient_dim: report.pe_deficient.dim(),
        positive_on_reachable: report.positive_on_reachable,
        restricted_min_eigenvalue: report.restricted_min_eigenvalue.map(round_sig),
        gramian_rank: sys.dim() - hidden.dim(),
        gramian_unobservable_basis: columns(hidden.basis()),
    })
}

#[derive(Serialize)]
struct SensorReport {
    scenario: String,
    sensor: String,
    horizon: usize,
    verdict: &'static str,
    innovation_dim: usize,
    innovation_norm: f64,
    epsilon_used: f64,
    innovation_basis: Vec<Vec<f64>>,
    existing_dim: usize,
    gramian_verdict: &'static str,
}

fn check_sensor(args: &CheckSensorArgs) -> Result<String, CliError> {
    let tol = tolerance(&args.source)?;
    let config = single_scenario(&args.source)?;
    let candidate = config::parse_sensor_arg(&args.sensor, &config.model)?;
    if let Some(eps) = args.epsilon {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(CliError::Input(format!("--epsilon must be non-negative, got {eps}")));
        }
    }
    let sys = config.build_system()?;
    sys.check_channel(&candidate, config.horizon)?;
    let span = propagated_subspace(&sys, &config.sensors, config.horizon, tol).map_err(numerical)?;
    let check = diversity_check(&sys, &span, &candidate, args.epsilon).map_err(numerical)?;
    let inc = gramian_increment(&sys, &config.sensors, &candidate, config.horizon, tol).map_err(numerical)?;
    let basis = match &check.verdict {
        liegram::diversity::DiversityVerdict::Redundant => Vec::new(),
        liegram::diversity::DiversityVerdict::Gain(s) => columns(s.basis()),
    };
    let report = SensorReport {
        scenario: config.name.clone(),
        sensor: candidate.name().to_string(),
        horizon: config.horizon,
        verdict: if check.is_redundant() { "redundant" } else { "gain" },
        innovation_dim: check.innovation_dim(),
        innovation_norm: round_sig(check.innovation_norm),
        epsilon_used: round_sig(check.epsilon),
        innovation_basis: basis,
        existing_dim: span.dim(),
        gramian_verdict: inc.verdict.as_str(),
    };
    let text = to_json(&report);
    if let Some(dir) = &args.out {
        let manifest = RunManifest {
            command: "check-sensor".into(),
            source: source_labels(&args.source, false),
            out_dir: dir.display().to_string(),
            tolerance: args.source.tolerance,
            epsilon: args.epsilon,
            files: Vec::new(),
        };
        output::write_artifacts(dir, &[("sensor.json".to_string(), text.clone())], manifest)?;
    }
    Ok(text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Analyze(a) => analyze(a),
        Command::CheckSensor(a) => check_sensor(a),
    };
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("liegram: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
