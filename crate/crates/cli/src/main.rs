//! `momentous` command-line driver.
//!
//! Exit codes: 0 completed, 1 I/O or failed check, 2 uncertainty violation,
//! 3 pole singularity, 4 configuration error, 5 step failure.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use momentous::ensemble::run_sweep;
use momentous::reproduction::{makarov_metrics, table1, table2, Report};
use momentous::state::slot;
use momentous::validation::{run_suites, Suite, ValidationContext};
use momentous::{TerminationTag, Trajectory};
use thiserror::Error;

use config::RunConfig;
use output::{RunResult, RunSummary, Summary};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] momentous::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Core(_) => 4,
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => 1,
        }
    }
}

fn status_code(tag: TerminationTag) -> u8 {
    match tag {
        TerminationTag::Completed => 0,
        TerminationTag::UncertaintyViolation => 2,
        TerminationTag::PoleSingularity => 3,
        TerminationTag::StepFailure => 5,
    }
}

#[derive(Parser)]
#[command(name = "momentous", version, about = "Second-order moment dynamics on the circle and the sphere")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration, or a sweep over one parameter.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override a config key, e.g. `--set params.gamma=-1.9`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Rerun the configuration recorded in a previous summary.
        #[arg(long, conflicts_with_all = ["config", "overrides"])]
        from_summary: Option<PathBuf>,
    },
    /// Regenerate a comparison table against the published numbers.
    Report {
        name: ReportName,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run the numerical self-checks.
    Validate {
        /// Suite to run; repeatable. All suites when absent.
        #[arg(long = "suite", value_name = "NAME")]
        suites: Vec<String>,
        /// Negate one sphere bracket before checking.
        #[arg(long, hide = true)]
        flip_bracket: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum ReportName {
    Table1,
    Table2,
    MakarovMetrics,
}

impl ReportName {
    fn name(self) -> &'static str {
        match self {
            ReportName::Table1 => "table1",
            ReportName::Table2 => "table2",
            ReportName::MakarovMetrics => "makarov_metrics",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, overrides, out_dir, from_summary } => {
            cmd_run(config.as_deref(), &overrides, out_dir, from_summary.as_deref())
        }
        Command::Report { name, config, overrides, out_dir, threads } => {
            cmd_report(name, config.as_deref(), &overrides, out_dir, threads)
        }
        Command::Validate { suites, flip_bracket } => cmd_validate(&suites, flip_bracket),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn resolve(mut cfg: RunConfig, out_dir: Option<PathBuf>) -> Result<RunConfig, CliError> {
    if out_dir.is_some() {
        cfg.output.dir = out_dir;
    }
    cfg.resolve_out_dir();
    let dir = cfg.output.dir.as_ref().expect("resolved");
    std::fs::create_dir_all(dir)?;
    Ok(cfg)
}

fn write_traj(cfg: &RunConfig, dir: &Path, stem: &str, traj: &Trajectory<f64>) -> Result<Option<String>, CliError> {
    if !cfg.output.csv {
        return Ok(None);
    }
    let name = format!("{stem}.csv");
    let file = std::fs::File::create(dir.join(&name))?;
    output::write_csv(traj, std::io::BufWriter::new(file))?;
    Ok(Some(name))
}

fn cmd_run(
    config: Option<&Path>,
    overrides: &[String],
    out_dir: Option<PathBuf>,
    from_summary: Option<&Path>,
) -> Result<u8, CliError> {
    let cfg = match from_summary {
        Some(p) => {
            let cfg = Summary::read(p)?.config;
            cfg.validate()?;
            cfg
        }
        None => config::load(config, overrides)?,
    };
    let cfg = resolve(cfg, out_dir)?;
    let dir = cfg.output.dir.clone().expect("resolved");
    let prefix = cfg.output.prefix.clone();
    let mut summary = Summary::new(&cfg);

    let code = match cfg.sweep_spec()? {
        None => {
            let traj = cfg.setup().run()?;
            let csv = write_traj(&cfg, &dir, &prefix, &traj)?;
            println!("{}", output::headline(&traj));
            summary.runs.push(RunSummary {
                label: prefix.clone(),
                sweep_value: None,
                error: None,
                result: Some(RunResult::of(&traj, csv)),
            });
            status_code(traj.status.tag)
        }
        Some(spec) => {
            let res = run_sweep(&spec)?;
            let mut code = None;
            for (k, p) in res.points.iter().enumerate() {
                let runs = std::iter::once(("", Some(&p.semiclassical)))
                    .chain(std::iter::once(("_classical", p.classical.as_ref())));
                for (suffix, run) in runs {
                    let Some(run) = run else { continue };
                    let label = format!("{prefix}_{k:03}{suffix}");
                    let entry = match run {
                        Ok(traj) => {
                            let csv = write_traj(&cfg, &dir, &label, traj)?;
                            println!("{label} value={} {}", p.value, output::headline(traj));
                            if code.is_none() && !traj.completed() {
                                code = Some(status_code(traj.status.tag));
                            }
                            RunSummary { label, sweep_value: Some(p.value), error: None, result: Some(RunResult::of(traj, csv)) }
                        }
                        Err(msg) => {
                            eprintln!("{label} value={} error: {msg}", p.value);
                            code.get_or_insert(4);
                            RunSummary { label, sweep_value: Some(p.value), error: Some(msg.clone()), result: None }
                        }
                    };
                    summary.runs.push(entry);
                }
            }
            summary.ensemble = res.summary.clone();
            if let Some(stats) = &res.summary {
                println!(
                    "ensemble t={} mean|dtheta|={:.6e} mean|dphi|={:.6e} mean rel dphi={:.6e} mean G2000 growth={:.6e}",
                    stats.t_eval, stats.abs_dtheta.mean, stats.abs_dphi.mean, stats.rel_dphi.mean, stats.g2000_growth.mean
                );
            }
            code.unwrap_or(0)
        }
    };
    if cfg.output.json {
        summary.write(&dir.join(format!("{prefix}.summary.json")))?;
    }
    Ok(code)
}

fn cmd_report(
    name: ReportName,
    config: Option<&Path>,
    overrides: &[String],
    out_dir: Option<PathBuf>,
    threads: Option<usize>,
) -> Result<u8, CliError> {
    let cfg = resolve(config::load(config, overrides)?, out_dir)?;
    let integ = cfg.integrator;
    let report: Report = match name {
        ReportName::Table1 => table1(&integ)?,
        ReportName::Table2 => table2(&integ, threads)?,
        ReportName::MakarovMetrics => makarov_metrics(&integ, threads)?,
    };
    print!("{}", report.to_text());
    let dir = cfg.output.dir.as_ref().expect("resolved");
    let twin = output::ReportFile::new(&cfg, report.clone());
    twin.write(&dir.join(format!("{}.json", name.name())))?;
    Ok(if report.all_pass() { 0 } else { 1 })
}

fn cmd_validate(names: &[String], flip_bracket: bool) -> Result<u8, CliError> {
    let suites = if names.is_empty() {
        Suite::ALL.to_vec()
    } else {
        names.iter().map(|n| Suite::parse(n)).collect::<Result<Vec<_>, _>>()?
    };
    let mut ctx = ValidationContext::new()?;
    if flip_bracket {
        ctx.sphere_table = ctx.sphere_table.with_negated_entry(slot::G2000, slot::G0200);
    }
    let reports = run_suites(&suites, &ctx)?;
    let mut ok = true;
    for r in &reports {
        for c in &r.checks {
            println!("{:<13} {:<40} {} {}", r.suite.name(), c.name, if c.passed { "PASS" } else { "FAIL" }, c.detail);
        }
        ok &= r.passed();
    }
    println!("{}", if ok { "validation passed" } else { "validation FAILED" });
    Ok(if ok { 0 } else { 1 })
}
