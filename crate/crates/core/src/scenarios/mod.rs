//! Named, reproducible experiments: a model, a solver configuration, an
//! initial field and a list of property checks with explicit thresholds.

mod catalog;
mod expectations;
mod growth;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use catalog::catalog;
pub use expectations::{Expectation, ExpectationOutcome};
pub use growth::{h1_growth_check, GrowthBranch, H1GrowthReport, GRADIENT_BOUND_SLACK};

use crate::diagnostics::{
    a_priori_check, extinction_time, fit_decay_constant, mass_balance_residual, BoundForm,
    DiagError, RunReport, EXTINCTION_REL_TOL,
};
use crate::grid::{norm, Grid, GridError, NormKind};
use crate::integrators::{
    cross_validate, run, run_pair, RunOutput, Scheme, SolverConfig, SolverError,
};
use crate::io::{save_field_csv, save_series_csv, IoError};
use crate::model::{FieldSpec, Model, ModelError, ModelSpec};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("missing diagnostics: {0}")]
    MissingDiagnostics(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Diagnostics(#[from] DiagError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<std::io::Error> for ScenarioError {
    fn from(e: std::io::Error) -> Self {
        ScenarioError::Io(IoError::Io(e))
    }
}

/// How many runs a scenario performs.
#[derive(Debug, Clone, PartialEq)]
pub enum Variant {
    Single,
    /// A second run with its own model and data, stepped in lockstep with
    /// the first.
    Pair { model: Box<ModelSpec>, u0: FieldSpec },
    /// One run per ramp size; the forcing's `eps_star` is replaced and the
    /// initial field rescaled to `||u0||_2 = eps_star t0^2`.
    RampSweep { eps_stars: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: &'static str,
    pub summary: &'static str,
    pub grid: Grid,
    pub model: ModelSpec,
    pub u0: FieldSpec,
    pub config: SolverConfig,
    pub variant: Variant,
    pub expectations: Vec<Expectation>,
}

/// One integrated run of a scenario.
#[derive(Debug, Clone)]
pub struct LabeledRun {
    pub label: String,
    pub scheme: Scheme,
    pub model: Model,
    pub u0_l2: f64,
    pub output: RunOutput,
    /// Ramp size, for sweep runs.
    pub eps_star: Option<f64>,
}

impl LabeledRun {
    /// Extinction time at threshold `EXTINCTION_REL_TOL * ||u0||_2`.
    pub fn extinction_time(&self) -> Result<Option<f64>, DiagError> {
        if self.u0_l2 == 0.0 {
            return Ok(Some(self.output.series.times[0]));
        }
        extinction_time(&self.output.series, EXTINCTION_REL_TOL * self.u0_l2)
    }
}

/// Pointwise-in-time differences of a paired run.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDiffs {
    pub field_diffs: Vec<f64>,
    pub forcing_diffs: Vec<f64>,
}

/// Implicit reference run on the first model and datum, with the sup over
/// output times of the `L^2` distance to the primary run.
#[derive(Debug, Clone)]
pub struct ReferenceRun {
    pub run: LabeledRun,
    pub sup_difference: f64,
}

/// Everything a scenario produced, before artifacts are written.
#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub report: ScenarioReport,
    pub runs: Vec<LabeledRun>,
    pub pair: Option<PairDiffs>,
    pub reference: Option<ReferenceRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub label: String,
    pub scheme: String,
    pub eps_star: Option<f64>,
    pub u0_l2: f64,
    pub extinction_time: Option<f64>,
    pub a_priori_ok: bool,
    pub mass_residual_max: f64,
    pub max_fixed_point_iterations: usize,
}

/// JSON report of a scenario; the summary fields describe the first run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub summary: String,
    pub passed: bool,
    #[serde(flatten)]
    pub run_report: RunReport,
    pub runs: Vec<RunSummary>,
    pub expectations: Vec<ExpectationOutcome>,
}

pub fn find(name: &str) -> Result<Scenario, ScenarioError> {
    catalog()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| ScenarioError::UnknownScenario(name.to_string()))
}

/// Runs the named scenario and writes its artifacts into `out_dir`.
pub fn run_scenario(name: &str, out_dir: &Path) -> Result<ScenarioReport, ScenarioError> {
    let outcome = find(name)?.execute()?;
    outcome.write_artifacts(out_dir)?;
    Ok(outcome.report)
}

fn summarize(run: &LabeledRun) -> Result<RunSummary, ScenarioError> {
    let residual = mass_balance_residual(&run.output.series, run.model.mu)?;
    Ok(RunSummary {
        label: run.label.clone(),
        scheme: run.scheme.name().to_string(),
        eps_star: run.eps_star,
        u0_l2: run.u0_l2,
        extinction_time: run.extinction_time()?,
        a_priori_ok: a_priori_check(&run.output.series, &run.model)?.ok,
        mass_residual_max: residual.iter().fold(0.0, |m, r| m.max(r.abs())),
        max_fixed_point_iterations: run.output.max_fixed_point_iterations,
    })
}

impl Scenario {
    fn single_run(
        &self,
        label: &str,
        spec: &ModelSpec,
        u0: &FieldSpec,
        config: &SolverConfig,
        eps_star: Option<f64>,
    ) -> Result<LabeledRun, ScenarioError> {
        let model = spec.build(&self.grid)?;
        let field = u0.sample(&self.grid)?;
        let output = run(&model, config, &field)?;
        Ok(LabeledRun {
            label: label.to_string(),
            scheme: config.scheme,
            model,
            u0_l2: norm(&field, NormKind::L2)?,
            output,
            eps_star,
        })
    }

    fn integrate(&self) -> Result<(Vec<LabeledRun>, Option<PairDiffs>), ScenarioError> {
        match &self.variant {
            Variant::Single => Ok((
                vec![self.single_run("main", &self.model, &self.u0, &self.config, None)?],
                None,
            )),
            Variant::Pair { model, u0 } => {
                let model_a = self.model.build(&self.grid)?;
                let model_b = model.build(&self.grid)?;
                let u0_a = self.u0.sample(&self.grid)?;
                let u0_b = u0.sample(&self.grid)?;
                let out = run_pair(&model_a, &model_b, &self.config, &u0_a, &u0_b)?;
                let runs = vec![
                    LabeledRun {
                        label: "a".into(),
                        scheme: self.config.scheme,
                        model: model_a,
                        u0_l2: norm(&u0_a, NormKind::L2)?,
                        output: out.a,
                        eps_star: None,
                    },
                    LabeledRun {
                        label: "b".into(),
                        scheme: self.config.scheme,
                        model: model_b,
                        u0_l2: norm(&u0_b, NormKind::L2)?,
                        output: out.b,
                        eps_star: None,
                    },
                ];
                let diffs = PairDiffs {
                    field_diffs: out.field_diffs,
                    forcing_diffs: out.forcing_diffs,
                };
                Ok((runs, Some(diffs)))
            }
            Variant::RampSweep { eps_stars } => {
                let t0 = self.model.forcing.t0;
                let runs = eps_stars
                    .iter()
                    .enumerate()
                    .map(|(k, &eps)| {
                        let mut spec = self.model.clone();
                        spec.forcing.eps_star = eps;
                        let u0 = self.u0.clone().with_l2_norm(eps * t0 * t0);
                        self.single_run(&format!("eps{k}"), &spec, &u0, &self.config, Some(eps))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok((runs, None))
            }
        }
    }

    fn reference(&self, primary: &LabeledRun) -> Result<Option<ReferenceRun>, ScenarioError> {
        let Some(eps) = self.expectations.iter().find_map(Expectation::reference_eps) else {
            return Ok(None);
        };
        let config = SolverConfig {
            scheme: Scheme::BackwardEulerReg,
            eps,
            ..self.config.clone()
        };
        let run = self.single_run("backward_euler", &self.model, &self.u0, &config, None)?;
        let u0 = self.u0.sample(&self.grid)?;
        let sup_difference = cross_validate(&primary.model, &self.config, &config, &u0)?;
        Ok(Some(ReferenceRun {
            run,
            sup_difference,
        }))
    }

    /// Integrates every run and evaluates the expectations.
    pub fn execute(&self) -> Result<ScenarioOutcome, ScenarioError> {
        let (runs, pair) = self.integrate()?;
        let reference = self.reference(&runs[0])?;
        let mut outcome = ScenarioOutcome {
            report: ScenarioReport {
                scenario: self.name.to_string(),
                summary: self.summary.to_string(),
                passed: false,
                run_report: RunReport::default(),
                runs: Vec::new(),
                expectations: Vec::new(),
            },
            runs,
            pair,
            reference,
        };
        let expectations = self
            .expectations
            .iter()
            .map(|e| e.evaluate(&outcome))
            .collect::<Result<Vec<_>, _>>()?;
        let mut summaries = outcome
            .runs
            .iter()
            .map(summarize)
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(r) = &outcome.reference {
            summaries.push(summarize(&r.run)?);
        }

        let first = &outcome.runs[0];
        let dim = self.grid.dim();
        let fit = fit_decay_constant(&first.output.series, dim, 0.0).ok();
        let run_report = RunReport {
            extinction_time: summaries[0].extinction_time,
            fitted_c: fit.map(|p| p.c),
            bound_form: fit.map(|_| BoundForm::for_dim(dim).name().to_string()),
            a_priori_ok: summaries.iter().all(|s| s.a_priori_ok),
            mass_residual_max: summaries[0].mass_residual_max,
            cross_validation_sup: outcome.reference.as_ref().map(|r| r.sup_difference),
        };
        outcome.report.passed = expectations.iter().all(|e| e.passed);
        outcome.report.run_report = run_report;
        outcome.report.runs = summaries;
        outcome.report.expectations = expectations;
        Ok(outcome)
    }
}

impl ScenarioOutcome {
    fn all_runs(&self) -> impl Iterator<Item = &LabeledRun> {
        self.runs.iter().chain(self.reference.iter().map(|r| &r.run))
    }

    /// Writes `<name>.json`, the first run's series as `<name>.csv`, further
    /// runs as `<name>_<label>.csv`, and any snapshots under
    /// `<name>_snapshots/`. Returns the written paths.
    pub fn write_artifacts(&self, out_dir: &Path) -> Result<Vec<PathBuf>, ScenarioError> {
        fs::create_dir_all(out_dir)?;
        let name = &self.report.scenario;
        let mut written = Vec::new();
        for (k, run) in self.all_runs().enumerate() {
            let file = if k == 0 {
                format!("{name}.csv")
            } else {
                format!("{name}_{}.csv", run.label)
            };
            let path = out_dir.join(file);
            save_series_csv(&run.output.series, &path)?;
            written.push(path);
            if !run.output.snapshots.is_empty() {
                let dir = out_dir.join(format!("{name}_snapshots"));
                fs::create_dir_all(&dir)?;
                for snap in &run.output.snapshots {
                    let path = dir.join(format!("{}_{:08}.csv", run.label, snap.step));
                    save_field_csv(&snap.field, &path)?;
                    written.push(path);
                }
            }
        }
        let path = out_dir.join(format!("{name}.json"));
        fs::write(&path, serde_json::to_string_pretty(&self.report)?)?;
        written.push(path);
        Ok(written)
    }
}
