//! CSV trajectories and the JSON run summary.

use std::io::Write;
use std::path::Path;

use momentous::analysis::{energy_drift, EnsembleStats};
use momentous::state::slot;
use momentous::integrator::StepStats;
use momentous::reproduction::Report;
use momentous::{Mode, MomentState, TerminationStatus, Trajectory};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::CliError;

pub const SUMMARY_FORMAT: &str = "momentous-summary/1";
pub const REPORT_FORMAT: &str = "momentous-report/1";

pub fn csv_header(mode: Mode) -> &'static [&'static str] {
    match mode {
        Mode::Sphere => &[
            "t", "theta", "p_theta", "phi_unwrapped", "p_phi", "G2000", "G1100", "G1010", "G1001", "G0200", "G0110",
            "G0101", "G0020", "G0011", "G0002", "dG_theta", "dG_phi", "energy",
        ],
        Mode::Circle => &["t", "theta", "p_theta", "G20", "G11", "G02", "dG_theta", "energy"],
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(traj: &Trajectory<f64>, w: W) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(csv_header(traj.mode))?;
    for s in &traj.samples {
        let mut row = Vec::with_capacity(18);
        row.push(num(s.t));
        row.extend(s.state.classical.iter().map(|&x| num(x)));
        row.extend(s.state.moments.iter().map(|&x| num(x)));
        row.push(num(s.delta_theta));
        if let Some(d) = s.delta_phi {
            row.push(num(d));
        }
        row.push(num(s.energy));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<RunResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub status: TerminationStatus<f64>,
    pub end_time: f64,
    pub final_state: MomentState<f64>,
    pub min_uncertainty_theta: f64,
    pub min_uncertainty_phi: Option<f64>,
    pub energy_drift: f64,
    pub samples: usize,
    pub steps: StepStats,
    /// File name relative to the summary.
    pub csv: Option<String>,
}

impl RunResult {
    pub fn of(traj: &Trajectory<f64>, csv: Option<String>) -> Self {
        let (min_theta, min_phi) = traj.min_uncertainty();
        RunResult {
            status: traj.status.clone(),
            end_time: traj.end_time(),
            final_state: traj.final_state().clone(),
            min_uncertainty_theta: min_theta,
            min_uncertainty_phi: min_phi,
            energy_drift: energy_drift(traj),
            samples: traj.samples.len(),
            steps: traj.stats,
            csv,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub format_version: String,
    /// Resolved configuration, without the output directory.
    pub config: RunConfig,
    pub runs: Vec<RunSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleStats<f64>>,
}

impl Summary {
    pub fn new(config: &RunConfig) -> Self {
        let mut config = config.clone();
        config.output.dir = None;
        Summary { format_version: SUMMARY_FORMAT.to_string(), config, runs: Vec::new(), ensemble: None }
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let s: Summary =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if s.format_version != SUMMARY_FORMAT {
            return Err(CliError::Config(format!(
                "{}: format_version {:?}, expected {SUMMARY_FORMAT:?}",
                path.display(),
                s.format_version
            )));
        }
        Ok(s)
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// Machine-readable twin of a comparison report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub format_version: String,
    pub config: RunConfig,
    pub report: Report,
}

impl ReportFile {
    pub fn new(config: &RunConfig, report: Report) -> Self {
        let mut config = config.clone();
        config.output.dir = None;
        ReportFile { format_version: REPORT_FORMAT.to_string(), config, report }
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// Theta and phi of the final state, for the one-line console report.
pub fn headline(traj: &Trajectory<f64>) -> String {
    let s = traj.final_state();
    let mut line = format!(
        "status={} t={:.6} theta={:.9} p_theta={:.9}",
        traj.status.tag,
        traj.end_time(),
        s.theta(),
        s.p_theta()
    );
    if let Some(phi) = s.phi() {
        line.push_str(&format!(" phi={phi:.9} G2000={:.9}", s.moments[slot::G2000]));
    } else {
        line.push_str(&format!(" G20={:.9}", s.moments[0]));
    }
    line
}
