//! Deterministic text artifacts: CSV traces, SVG plots, JSON reports.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use liegram::scenarios::ScenarioTrace;
use serde::Serialize;

use crate::CliError;

pub const SIGNIFICANT_DIGITS: usize = 12;

pub const CSV_HEADER: &str = "scenario,t,log_det_P,min_eig_P,min_eig_J,rank_Wo,temporal_term,spatial_term";

/// `%.12g`-style formatting.
pub fn fmt_g(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let p = SIGNIFICANT_DIGITS;
    let sci = format!("{:.*e}", p - 1, x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if exp < -4 || exp >= p as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Rounds to the printed precision so JSON output matches the CSV digits.
pub fn round_sig(x: f64) -> f64 {
    if x.is_finite() {
        fmt_g(x).parse().unwrap()
    } else {
        x
    }
}

pub fn trace_csv(traces: &[ScenarioTrace]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for trace in traces {
        for s in &trace.steps {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                trace.name,
                s.t,
                fmt_g(s.log_det_p),
                fmt_g(s.min_eig_p),
                fmt_g(s.min_eig_j),
                s.rank_wo,
                fmt_g(s.record.temporal),
                fmt_g(s.record.spatial),
            )
            .unwrap();
        }
    }
    out
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Line chart of `log det P` against `t`, one polyline per trace.
pub fn log_det_svg(traces: &[ScenarioTrace]) -> String {
    let (w, h) = (720.0, 440.0);
    let (left, right, top, bottom) = (70.0, 150.0, 30.0, 50.0);
    let pw = w - left - right;
    let ph = h - top - bottom;

    let points = traces
        .iter()
        .flat_map(|tr| tr.steps.iter().map(|s| (s.t as f64, s.log_det_p)));
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for (x, y) in points {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x0 > x1 {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1.0 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-9 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + (y1 - y) / (y1 - y0) * ph;

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    writeln!(
        svg,
        r#"<path d="M{left} {top} V{} H{}" fill="none" stroke="black"/>"#,
        top + ph,
        left + pw
    )
    .unwrap();
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        let (px, py) = (sx(fx), sy(fy));
        writeln!(
            svg,
            r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            top + ph,
            top + ph + 5.0,
            top + ph + 20.0,
            fmt_tick(fx)
        )
        .unwrap();
        writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{left}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            left - 5.0,
            left - 8.0,
            py + 4.0,
            fmt_tick(fy)
        )
        .unwrap();
    }
    writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">t</text>"#,
        left + pw / 2.0,
        h - 10.0
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">log det P</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    )
    .unwrap();

    for (k, tr) in traces.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = tr
            .steps
            .iter()
            .map(|s| format!("{:.2},{:.2}", sx(s.t as f64), sy(s.log_det_p)))
            .collect();
        writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            pts.join(" ")
        )
        .unwrap();
        let ly = top + 10.0 + 18.0 * k as f64;
        let lx = left + pw + 15.0;
        writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&tr.name)
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}

fn fmt_tick(x: f64) -> String {
    let r = (x * 100.0).round() / 100.0;
    fmt_g(if r == 0.0 { 0.0 } else { r })
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub source: Vec<String>,
    pub out_dir: String,
    pub tolerance: Option<f64>,
    pub epsilon: Option<f64>,
    pub files: Vec<String>,
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

/// Writes every artifact, then the manifest listing them.
pub fn write_artifacts(out_dir: &Path, files: &[(String, String)], mut manifest: RunManifest) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", out_dir.display())))?;
    for (name, contents) in files {
        let path: PathBuf = out_dir.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        manifest.files.push(name.clone());
    }
    manifest.files.push("manifest.json".into());
    let path = out_dir.join("manifest.json");
    std::fs::write(&path, to_json(&manifest)).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}
