//! Command-line front end: `run`, `scenario`, `norms`, `fit` and `report`.
//!
//! [`main_with_args`] parses arguments, dispatches, prints to stdout and
//! returns the process exit code: 0 on success, 2 for argument, config and
//! input-parse errors, 3 for runtime failures, 4 when a scenario
//! expectation fails.

pub mod config;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use satnls_core::io::{load_sampled_csv, load_series_csv, save_field_csv, save_series_csv};
use satnls_core::rnp::yn_table;
use satnls_core::{catalog, fit_decay_constant, run, RunReport, ScenarioError, ScenarioReport};
use serde::Serialize;
use thiserror::Error;

pub use config::{emit_config, parse_config, parse_config_str, ConfigError, OutputSpec, RunBundle};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_EXPECTATION: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "satnls", version, about = "Saturated damped Schrodinger solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the run described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Execute a catalog scenario, or every scenario with `all`.
    Scenario {
        name: String,
        /// Artifact directory; defaults to $SATNLS_OUTPUT_DIR, then `output`.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Print Y_n norms of a sampled function as a JSON array.
    Norms {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        /// Box half-width; required for index-format CSVs.
        #[arg(long)]
        half_width: Option<f64>,
    },
    /// Fit the decay-bound constant to a series CSV and print it as JSON.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 0.0)]
        t0: f64,
    },
    /// Recompute the JSON report of a finished run from its series CSV.
    Report {
        #[arg(long)]
        config: PathBuf,
        /// Series CSV; defaults to the configured series path.
        #[arg(long)]
        series: Option<PathBuf>,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot parse `{path}`: {reason}")]
    Input { path: String, reason: String },
    #[error("{0}")]
    Runtime(String),
    #[error("expectations failed in: {}", .0.join(", "))]
    ExpectationFailed(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Input { .. } => EXIT_PARSE,
            CliError::Runtime(_) => EXIT_RUNTIME,
            CliError::ExpectationFailed(_) => EXIT_EXPECTATION,
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::UnknownScenario(_) => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn input_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

/// Root override from `SATNLS_OUTPUT_DIR`, if set and non-empty.
pub fn output_dir_override() -> Option<PathBuf> {
    std::env::var_os(config::OUTPUT_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Errors go to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let mut stdout = std::io::stdout().lock();
    match execute(cli.command, &mut stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("satnls: {e}");
            e.exit_code()
        }
    }
}

/// Runs one command, writing its human-readable output to `out`.
pub fn execute(command: Command, out: &mut impl std::io::Write) -> Result<(), CliError> {
    match command {
        Command::Run { config } => cmd_run(&config, out),
        Command::Scenario { name, output_dir } => cmd_scenario(&name, output_dir, out),
        Command::Norms {
            input,
            n_list,
            half_width,
        } => cmd_norms(&input, &n_list, half_width, out),
        Command::Fit { input, dim, t0 } => cmd_fit(&input, dim, t0, out),
        Command::Report { config, series } => cmd_report(&config, series, out),
    }
}

fn write_json(out: &mut impl std::io::Write, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(runtime)?;
    writeln!(out, "{text}").map_err(runtime)
}

fn write_report(path: &Path, report: &RunReport) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(runtime)?;
    }
    let text = serde_json::to_string_pretty(report).map_err(runtime)?;
    fs::write(path, text).map_err(runtime)
}

fn cmd_run(path: &Path, out: &mut impl std::io::Write) -> Result<(), CliError> {
    let bundle = parse_config(path)?;
    let paths = bundle.output.resolve(output_dir_override().as_deref());
    let model = bundle.model.build(&bundle.grid).map_err(runtime)?;
    let u0 = bundle.u0.sample(&bundle.grid).map_err(runtime)?;
    let output = run(&model, &bundle.solver, &u0).map_err(runtime)?;

    if let Some(parent) = paths.series.parent() {
        fs::create_dir_all(parent).map_err(runtime)?;
    }
    save_series_csv(&output.series, &paths.series).map_err(runtime)?;
    if !output.snapshots.is_empty() {
        fs::create_dir_all(&paths.snapshots).map_err(runtime)?;
        for snap in &output.snapshots {
            let file = paths.snapshots.join(format!("{:08}.csv", snap.step));
            save_field_csv(&snap.field, &file).map_err(runtime)?;
        }
    }
    let report = RunReport::from_series(&output.series, &model).map_err(runtime)?;
    write_report(&paths.report, &report)?;
    write_json(out, &report)
}

fn cmd_scenario(
    name: &str,
    output_dir: Option<PathBuf>,
    out: &mut impl std::io::Write,
) -> Result<(), CliError> {
    let dir = output_dir
        .or_else(output_dir_override)
        .unwrap_or_else(|| OutputSpec::default().root);
    let names: Vec<&'static str> = if name == "all" {
        catalog().iter().map(|s| s.name).collect()
    } else {
        let known = catalog().into_iter().find(|s| s.name == name);
        match known {
            Some(s) => vec![s.name],
            None => return Err(ScenarioError::UnknownScenario(name.to_string()).into()),
        }
    };
    let results: Vec<Result<ScenarioReport, ScenarioError>> = names
        .par_iter()
        .map(|n| satnls_core::run_scenario(n, &dir))
        .collect();

    let mut failed = Vec::new();
    for (n, result) in names.iter().zip(results) {
        let report = result?;
        let status = if report.passed { "PASS" } else { "FAIL" };
        writeln!(out, "{status} {n}").map_err(runtime)?;
        for e in report.expectations.iter().filter(|e| !e.passed) {
            writeln!(out, "  failed {}: {}", e.name, e.detail).map_err(runtime)?;
        }
        if !report.passed {
            failed.push(n.to_string());
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::ExpectationFailed(failed))
    }
}

fn cmd_norms(
    input: &Path,
    n_list: &[usize],
    half_width: Option<f64>,
    out: &mut impl std::io::Write,
) -> Result<(), CliError> {
    let f = load_sampled_csv(input, half_width).map_err(|e| input_error(input, e))?;
    let table = yn_table(&f, n_list).map_err(|e| CliError::Usage(e.to_string()))?;
    write_json(out, &table)
}

fn cmd_fit(input: &Path, dim: usize, t0: f64, out: &mut impl std::io::Write) -> Result<(), CliError> {
    let series = load_series_csv(input).map_err(|e| input_error(input, e))?;
    let params = fit_decay_constant(&series, dim, t0).map_err(runtime)?;
    #[derive(Serialize)]
    struct Fit {
        bound_form: &'static str,
        #[serde(flatten)]
        params: satnls_core::BoundCurveParams,
    }
    write_json(
        out,
        &Fit {
            bound_form: params.form().name(),
            params,
        },
    )
}

fn cmd_report(
    config: &Path,
    series: Option<PathBuf>,
    out: &mut impl std::io::Write,
) -> Result<(), CliError> {
    let bundle = parse_config(config)?;
    let paths = bundle.output.resolve(output_dir_override().as_deref());
    let series_path = series.unwrap_or(paths.series);
    let series = load_series_csv(&series_path).map_err(|e| input_error(&series_path, e))?;
    let model = bundle.model.build(&bundle.grid).map_err(runtime)?;
    let report = RunReport::from_series(&series, &model).map_err(runtime)?;
    write_report(&paths.report, &report)?;
    write_json(out, &report)
}
