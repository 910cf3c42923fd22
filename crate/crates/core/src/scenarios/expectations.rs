use serde::{Deserialize, Serialize};

use super::{h1_growth_check, GrowthBranch, LabeledRun, ScenarioError, ScenarioOutcome};
use crate::diagnostics::{
    a_priori_check, bound_curve, continuous_dependence_check, fit_decay_constant, linear_fit,
    mass_balance_residual, stabilization_check, BoundCurveParams, DiagError,
};

/// Rounding allowance when checking that a fitted bound dominates the data.
const DOMINATION_REL_SLACK: f64 = 1e-12;
/// Relative gap at which a fitted bound counts as touching the data.
const TOUCH_REL_TOL: f64 = 1e-9;

/// A named property check with its threshold.
#[derive(Debug, Clone, PartialEq)]
pub enum Expectation {
    /// Finite extinction time, at most `t_max`.
    ExtinctionBy { t_max: f64 },
    /// After extinction the mass is exactly zero at every sample.
    StaysExtinct,
    /// `max_t |r(t)| <= rel_tol ||u0||_2^2` for the mass-balance residual.
    MassBalance { rel_tol: f64 },
    /// `max_t |mass(t) - mass(0)| <= rel_tol mass(0)` (undamped, unforced).
    MassConserved { rel_tol: f64 },
    /// `R^2 >= r2_min` for `||u||_2^{1/2}` against `t` on `[0.2 T*, 0.9 T*]`.
    SqrtLinearProfile { r2_min: f64 },
    /// Sup `L^2` distance to the implicit scheme at `eps` within
    /// `rel_tol ||u0||_2`.
    CrossIntegrator { eps: f64, rel_tol: f64 },
    /// Extinction times of both schemes within `rel_tol` of each other.
    ExtinctionAgreement { eps: f64, rel_tol: f64 },
    /// Fitted decay constant positive, with the bound dominating every
    /// sample and touching at least one.
    DecayConstant,
    APriori,
    /// `||grad u(t)|| <= ||grad u0|| + int ||grad f|| + slack`.
    GradientBound { slack: f64 },
    /// Finite, positive growth constant in the exponential `H^1` bound.
    GrowthConstantPositive,
    /// After extinction, `max |i mu U - f| <= tol` on the zero set.
    ZeroSetBalance { tol: f64 },
    /// `max ||u||_2` over the final `tail_fraction` of samples.
    TailVanishes { tail_fraction: f64, threshold: f64 },
    /// Pairwise continuous dependence at every ordered pair of times.
    ContinuousDependence,
    /// Ramp sweep: extinction no later as `eps_star` decreases, and
    /// `T* <= factor t0` at the smallest `eps_star`.
    RampExtinction { factor: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationOutcome {
    pub name: String,
    /// Diagnostics operation behind the check.
    pub check: String,
    pub passed: bool,
    pub value: Option<f64>,
    pub threshold: Option<f64>,
    pub detail: String,
}

fn worst<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

impl Expectation {
    pub fn name(&self) -> &'static str {
        match self {
            Expectation::ExtinctionBy { .. } => "extinction_by",
            Expectation::StaysExtinct => "stays_extinct",
            Expectation::MassBalance { .. } => "mass_balance",
            Expectation::MassConserved { .. } => "mass_conserved",
            Expectation::SqrtLinearProfile { .. } => "sqrt_linear_profile",
            Expectation::CrossIntegrator { .. } => "cross_integrator",
            Expectation::ExtinctionAgreement { .. } => "extinction_agreement",
            Expectation::DecayConstant => "decay_constant",
            Expectation::APriori => "a_priori",
            Expectation::GradientBound { .. } => "gradient_bound",
            Expectation::GrowthConstantPositive => "growth_constant_positive",
            Expectation::ZeroSetBalance { .. } => "zero_set_balance",
            Expectation::TailVanishes { .. } => "tail_vanishes",
            Expectation::ContinuousDependence => "continuous_dependence",
            Expectation::RampExtinction { .. } => "ramp_extinction",
        }
    }

    /// The diagnostics operation the check relies on.
    pub fn check(&self) -> &'static str {
        match self {
            Expectation::ExtinctionBy { .. }
            | Expectation::StaysExtinct
            | Expectation::ExtinctionAgreement { .. }
            | Expectation::RampExtinction { .. } => "extinction_time",
            Expectation::MassBalance { .. } | Expectation::MassConserved { .. } => {
                "mass_balance_residual"
            }
            Expectation::SqrtLinearProfile { .. } => "linear_fit",
            Expectation::CrossIntegrator { .. } => "cross_validate",
            Expectation::DecayConstant => "fit_decay_constant",
            Expectation::APriori => "a_priori_check",
            Expectation::GradientBound { .. } | Expectation::GrowthConstantPositive => {
                "h1_growth_check"
            }
            Expectation::ZeroSetBalance { .. } => "saturated_section",
            Expectation::TailVanishes { .. } => "stabilization_check",
            Expectation::ContinuousDependence => "continuous_dependence_check",
        }
    }

    pub fn threshold(&self) -> Option<f64> {
        match *self {
            Expectation::ExtinctionBy { t_max } => Some(t_max),
            Expectation::StaysExtinct => Some(0.0),
            Expectation::MassBalance { rel_tol }
            | Expectation::MassConserved { rel_tol }
            | Expectation::CrossIntegrator { rel_tol, .. }
            | Expectation::ExtinctionAgreement { rel_tol, .. } => Some(rel_tol),
            Expectation::SqrtLinearProfile { r2_min } => Some(r2_min),
            Expectation::DecayConstant | Expectation::GrowthConstantPositive => Some(0.0),
            Expectation::APriori => Some(crate::diagnostics::A_PRIORI_SLACK),
            Expectation::GradientBound { slack } => Some(slack),
            Expectation::ZeroSetBalance { tol } => Some(tol),
            Expectation::TailVanishes { threshold, .. } => Some(threshold),
            Expectation::ContinuousDependence => None,
            Expectation::RampExtinction { factor } => Some(factor),
        }
    }

    /// Regularization of the implicit reference run this check needs.
    pub(super) fn reference_eps(&self) -> Option<f64> {
        match *self {
            Expectation::CrossIntegrator { eps, .. }
            | Expectation::ExtinctionAgreement { eps, .. } => Some(eps),
            _ => None,
        }
    }

    pub fn evaluate(&self, outcome: &ScenarioOutcome) -> Result<ExpectationOutcome, ScenarioError> {
        let (passed, value, threshold, detail) = self.measure(outcome)?;
        Ok(ExpectationOutcome {
            name: self.name().to_string(),
            check: self.check().to_string(),
            passed,
            value,
            threshold: threshold.or(self.threshold()),
            detail,
        })
    }

    #[allow(clippy::type_complexity)]
    fn measure(
        &self,
        outcome: &ScenarioOutcome,
    ) -> Result<(bool, Option<f64>, Option<f64>, String), ScenarioError> {
        let runs = &outcome.runs;
        Ok(match *self {
            Expectation::ExtinctionBy { t_max } => {
                let times = extinction_times(runs)?;
                match times.iter().copied().collect::<Option<Vec<f64>>>() {
                    Some(ts) => {
                        let t = worst(ts);
                        (t <= t_max, Some(t), None, format!("latest extinction at t = {t}"))
                    }
                    None => (false, None, None, "no extinction within the run".into()),
                }
            }
            Expectation::StaysExtinct => {
                let mut max_after = 0.0f64;
                for run in runs {
                    let Some(t) = run.extinction_time()? else {
                        return Ok((false, None, None, format!("run {} never extinct", run.label)));
                    };
                    let s = &run.output.series;
                    for (ti, m) in s.times.iter().zip(&s.mass_sq) {
                        if *ti >= t {
                            max_after = max_after.max(*m);
                        }
                    }
                }
                (
                    max_after == 0.0,
                    Some(max_after),
                    None,
                    "largest post-extinction mass".into(),
                )
            }
            Expectation::MassBalance { rel_tol } | Expectation::MassConserved { rel_tol } => {
                let mut rel = f64::NEG_INFINITY;
                for run in runs {
                    let r = mass_balance_residual(&run.output.series, run.model.mu)?;
                    let m0 = run.output.series.mass_sq[0];
                    let max = r.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                    rel = rel.max(if m0 > 0.0 { max / m0 } else { max });
                }
                (
                    rel <= rel_tol,
                    Some(rel),
                    None,
                    "max residual relative to the initial mass".into(),
                )
            }
            Expectation::SqrtLinearProfile { r2_min } => {
                let mut r2 = f64::INFINITY;
                for run in runs {
                    let Some(t_star) = run.extinction_time()? else {
                        return Ok((false, None, None, format!("run {} never extinct", run.label)));
                    };
                    let s = &run.output.series;
                    let (lo, hi) = (0.2 * t_star, 0.9 * t_star);
                    let (xs, ys): (Vec<f64>, Vec<f64>) = s
                        .times
                        .iter()
                        .zip(&s.mass_sq)
                        .filter(|(t, _)| **t >= lo && **t <= hi)
                        .map(|(t, m)| (*t, m.sqrt().sqrt()))
                        .unzip();
                    r2 = r2.min(linear_fit(&xs, &ys)?.r_squared);
                }
                (r2 >= r2_min, Some(r2), None, "R^2 of ||u||^(1/2) against t".into())
            }
            Expectation::CrossIntegrator { rel_tol, .. } => {
                let reference = require_reference(outcome)?;
                let rel = reference.sup_difference / runs[0].u0_l2;
                (
                    rel <= rel_tol,
                    Some(rel),
                    None,
                    "sup L2 difference relative to ||u0||".into(),
                )
            }
            Expectation::ExtinctionAgreement { rel_tol, .. } => {
                let reference = require_reference(outcome)?;
                match (runs[0].extinction_time()?, reference.run.extinction_time()?) {
                    (Some(a), Some(b)) => {
                        let rel = (a - b).abs() / a.max(b);
                        (
                            rel <= rel_tol,
                            Some(rel),
                            None,
                            format!("extinction at {a} (splitting) and {b} (implicit)"),
                        )
                    }
                    (a, b) => (
                        false,
                        None,
                        None,
                        format!("extinction times {a:?} (splitting) and {b:?} (implicit)"),
                    ),
                }
            }
            Expectation::DecayConstant => {
                let mut c_min = f64::INFINITY;
                let mut notes = Vec::new();
                let mut ok = true;
                for run in runs {
                    let dim = run.model.grid.dim();
                    match fit_decay_constant(&run.output.series, dim, 0.0) {
                        Ok(params) => {
                            let (dominates, touches) = tight_fit(run, &params)?;
                            ok &= dominates && touches && params.c > 0.0;
                            c_min = c_min.min(params.c);
                            notes.push(format!(
                                "{}: c = {}, dominates = {dominates}, touches = {touches}",
                                run.label, params.c
                            ));
                        }
                        Err(e @ (DiagError::NoPositiveConstant { .. } | DiagError::InsufficientData(_))) => {
                            ok = false;
                            notes.push(format!("{}: {e}", run.label));
                        }
                        Err(e) => return Err(e.into()),
                    }
                }
                let value = c_min.is_finite().then_some(c_min);
                (ok, value, None, notes.join("; "))
            }
            Expectation::APriori => {
                let mut violation = f64::NEG_INFINITY;
                let mut ok = true;
                for run in runs {
                    let r = a_priori_check(&run.output.series, &run.model)?;
                    ok &= r.ok;
                    violation = violation.max(r.max_violation);
                }
                (ok, Some(violation), None, "largest excess over the bound".into())
            }
            Expectation::GradientBound { slack } => {
                let mut violation = f64::NEG_INFINITY;
                for run in runs {
                    let r = h1_growth_check(&run.output.series, &run.model)?;
                    if r.branch != GrowthBranch::Gradient {
                        return Ok((
                            false,
                            None,
                            None,
                            format!("run {} has a non-constant potential", run.label),
                        ));
                    }
                    violation = violation.max(r.max_violation.unwrap_or(f64::INFINITY));
                }
                (
                    violation <= slack,
                    Some(violation),
                    None,
                    "largest excess over the gradient bound".into(),
                )
            }
            Expectation::GrowthConstantPositive => {
                let mut c_min = f64::INFINITY;
                let mut ok = true;
                for run in runs {
                    let r = h1_growth_check(&run.output.series, &run.model)?;
                    let c = r.growth_constant.unwrap_or(f64::NAN);
                    ok &= r.ok && c > 0.0;
                    c_min = c_min.min(c);
                }
                (ok, Some(c_min), None, "smallest admissible growth constant".into())
            }
            Expectation::ZeroSetBalance { tol } => {
                let mut max = 0.0f64;
                for run in runs {
                    let Some(t) = run.extinction_time()? else {
                        return Ok((false, None, None, format!("run {} never extinct", run.label)));
                    };
                    let s = &run.output.series;
                    for (ti, b) in s.times.iter().zip(&run.output.section_balance) {
                        if *ti >= t {
                            max = max.max(*b);
                        }
                    }
                }
                (
                    max <= tol,
                    Some(max),
                    None,
                    "largest post-extinction |i mu U - f| on the zero set".into(),
                )
            }
            Expectation::TailVanishes {
                tail_fraction,
                threshold,
            } => {
                let v = worst(
                    runs.iter()
                        .map(|r| stabilization_check(&r.output.series, tail_fraction))
                        .collect::<Result<Vec<_>, _>>()?,
                );
                (v <= threshold, Some(v), None, "max ||u|| over the tail".into())
            }
            Expectation::ContinuousDependence => {
                let pair = outcome.pair.as_ref().ok_or_else(|| {
                    ScenarioError::MissingDiagnostics("continuous dependence needs a pair".into())
                })?;
                let r = continuous_dependence_check(
                    &runs[0].output.series,
                    &runs[1].output.series,
                    &pair.field_diffs,
                    &pair.forcing_diffs,
                )?;
                (
                    r.ok,
                    Some(r.max_violation),
                    Some(r.slack),
                    "largest excess over the contraction bound".into(),
                )
            }
            Expectation::RampExtinction { factor } => {
                let mut sweep: Vec<(f64, Option<f64>, f64)> = Vec::new();
                for run in runs {
                    let eps = run.eps_star.ok_or_else(|| {
                        ScenarioError::MissingDiagnostics("ramp sweep runs need eps_star".into())
                    })?;
                    sweep.push((eps, run.extinction_time()?, run.model.forcing.t0()));
                }
                sweep.sort_by(|a, b| b.0.total_cmp(&a.0));
                let detail = sweep
                    .iter()
                    .map(|(e, t, _)| format!("eps_star {e}: T* {t:?}"))
                    .collect::<Vec<_>>()
                    .join(", ");
                let times: Option<Vec<f64>> = sweep.iter().map(|s| s.1).collect();
                match (times, sweep.last()) {
                    (Some(ts), Some(&(_, _, t0))) => {
                        let monotone = ts.windows(2).all(|w| w[1] <= w[0]);
                        let last = *ts.last().unwrap_or(&f64::INFINITY);
                        let ratio = last / t0;
                        (
                            monotone && ratio <= factor,
                            Some(ratio),
                            None,
                            format!("{detail}; monotone = {monotone}"),
                        )
                    }
                    _ => (false, None, None, detail),
                }
            }
        })
    }
}

fn extinction_times(runs: &[LabeledRun]) -> Result<Vec<Option<f64>>, ScenarioError> {
    runs.iter()
        .map(|r| r.extinction_time().map_err(ScenarioError::from))
        .collect()
}

fn require_reference(outcome: &ScenarioOutcome) -> Result<&super::ReferenceRun, ScenarioError> {
    outcome
        .reference
        .as_ref()
        .ok_or_else(|| ScenarioError::MissingDiagnostics("no implicit reference run".into()))
}

/// Whether the fitted bound dominates every sample from its start time and
/// touches at least one later sample.
fn tight_fit(run: &LabeledRun, params: &BoundCurveParams) -> Result<(bool, bool), ScenarioError> {
    let s = &run.output.series;
    let mut dominates = true;
    let mut touches = false;
    for (i, (t, m)) in s.times.iter().zip(&s.mass_sq).enumerate() {
        if *t < params.t0 {
            continue;
        }
        let data = m.sqrt();
        let bound = bound_curve(params, *t)?;
        dominates &= data <= bound * (1.0 + DOMINATION_REL_SLACK);
        if i > 0 && data > 0.0 && (bound - data).abs() <= TOUCH_REL_TOL * data {
            touches = true;
        }
    }
    Ok((dominates, touches))
}
