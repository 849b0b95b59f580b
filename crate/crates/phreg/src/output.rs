//! Result files: trajectory CSV, metrics JSON, sweep CSV, and a static SVG
//! plot of the regulation-error norm.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ControllerDef;
use crate::error::Result;
use crate::regulator::{Controller, SweepReport};
use crate::sim::{ErrorMetrics, Trajectory};

/// Columns: `t, re(e_1), im(e_1), ..., re(e_nN), im(e_nN), err_norm, energy`
/// (always `2 nN + 3` columns).
pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let nn = traj.errors.first().map_or(0, |e| e.len());
    let mut text = String::new();
    text.push('t');
    for i in 1..=nn {
        write!(text, ",re_e{i},im_e{i}").unwrap();
    }
    text.push_str(",err_norm,energy\n");
    for j in 0..traj.steps() {
        write!(text, "{:.*}", 12, traj.times[j]).unwrap();
        for i in 0..nn {
            let z = traj.errors[j][i];
            write!(text, ",{:e},{:e}", z.re, z.im).unwrap();
        }
        writeln!(text, ",{:e},{:e}", traj.error_norms[j], traj.energies[j]).unwrap();
    }
    std::fs::write(path, text)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsFile {
    pub head_sup: f64,
    pub tail_sup: f64,
    pub decay_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abscissa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regulator_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_seconds: Option<f64>,
}

impl MetricsFile {
    pub fn from_metrics(m: &ErrorMetrics) -> Self {
        MetricsFile {
            head_sup: m.head_sup,
            tail_sup: m.tail_sup,
            decay_rate: m.decay_rate,
            abscissa: None,
            regulator_residual: None,
            runtime_seconds: None,
        }
    }
}

pub fn write_metrics_json(path: &Path, metrics: &MetricsFile) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(metrics)?)?;
    Ok(())
}

pub fn write_controller_json(path: &Path, ctrl: &Controller) -> Result<()> {
    let def = ControllerDef::from_controller(ctrl);
    std::fs::write(path, serde_json::to_string_pretty(&def)?)?;
    Ok(())
}

pub fn read_controller_json(path: &Path) -> Result<Controller> {
    let text = std::fs::read_to_string(path)?;
    let def: ControllerDef = serde_json::from_str(&text)?;
    def.build()
}

pub fn write_sweep_csv(path: &Path, report: &SweepReport) -> Result<()> {
    let mut text = String::from("epsilon,abscissa\n");
    for entry in &report.entries {
        writeln!(text, "{:e},{:e}", entry.epsilon, entry.abscissa).unwrap();
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Static line plot of `||e(t)||` against time on a log10 vertical axis.
pub fn write_error_svg(path: &Path, traj: &Trajectory) -> Result<()> {
    const W: f64 = 760.0;
    const H: f64 = 420.0;
    const ML: f64 = 70.0;
    const MR: f64 = 20.0;
    const MT: f64 = 20.0;
    const MB: f64 = 50.0;

    let t_max = traj.horizon().max(f64::MIN_POSITIVE);
    let floor = 1e-16;
    let logs: Vec<f64> = traj
        .error_norms
        .iter()
        .map(|&e| e.max(floor).log10())
        .collect();
    let y_max = logs
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
        .ceil();
    let y_min = logs.iter().copied().fold(f64::INFINITY, f64::min).floor();
    let y_span = (y_max - y_min).max(1.0);

    let x_of = |t: f64| ML + (t / t_max) * (W - ML - MR);
    let y_of = |lg: f64| MT + (y_max - lg) / y_span * (H - MT - MB);

    let mut points = String::new();
    let stride = (traj.steps() / 2000).max(1);
    for (j, &lg) in logs.iter().enumerate().step_by(stride) {
        write!(points, "{:.2},{:.2} ", x_of(traj.times[j]), y_of(lg)).unwrap();
    }

    let mut svg = String::new();
    write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">
<rect width="{W}" height="{H}" fill="white"/>
"#
    )
    .unwrap();
    // axes
    write!(
        svg,
        r#"<line x1="{ML}" y1="{MT}" x2="{ML}" y2="{}" stroke="black"/>
<line x1="{ML}" y1="{}" x2="{}" y2="{}" stroke="black"/>
"#,
        H - MB,
        H - MB,
        W - MR,
        H - MB
    )
    .unwrap();
    // horizontal (decade) grid lines and labels
    let mut lg = y_min;
    while lg <= y_max + 1e-9 {
        let y = y_of(lg);
        write!(
            svg,
            r##"<line x1="{ML}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/>
<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="end">1e{lg:.0}</text>
"##,
            W - MR,
            ML - 6.0,
            y + 4.0
        )
        .unwrap();
        lg += 1.0;
    }
    // time ticks
    for k in 0..=4 {
        let t = t_max * k as f64 / 4.0;
        let x = x_of(t);
        write!(
            svg,
            r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/>
<text x="{x:.2}" y="{}" font-size="12" text-anchor="middle">{t:.1}</text>
"#,
            H - MB,
            H - MB + 5.0,
            H - MB + 20.0
        )
        .unwrap();
    }
    write!(
        svg,
        r##"<text x="{:.2}" y="{}" font-size="13" text-anchor="middle">t</text>
<text x="16" y="{:.2}" font-size="13" text-anchor="middle" transform="rotate(-90 16 {:.2})">|e(t)|</text>
<polyline points="{points}" fill="none" stroke="#c2443c" stroke-width="1.4"/>
</svg>
"##,
        (ML + W - MR) / 2.0,
        H - 8.0,
        (MT + H - MB) / 2.0,
        (MT + H - MB) / 2.0
    )
    .unwrap();
    std::fs::write(path, svg)?;
    Ok(())
}
