//! Post-processing of diagnostic series: mass balance, extinction time,
//! decay-bound fitting and the a-priori / continuous-dependence checks.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{boundary_mass_fraction, h1_semi_sq, raw_norm, ComplexField, NormKind};
use crate::model::Model;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagError {
    #[error("series is empty")]
    EmptySeries,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("no positive decay constant fits the data (best c = {c})")]
    NoPositiveConstant { c: f64 },
    #[error("time {t} precedes the reference time {t0}")]
    InvalidTime { t: f64, t0: f64 },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("series are sampled on different time grids")]
    GridMismatch,
    #[error("invalid series: {0}")]
    InvalidSeries(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Per-output-time diagnostics of a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagSeries {
    pub times: Vec<f64>,
    /// `||u||_2^2`.
    pub mass_sq: Vec<f64>,
    /// `||u||_1`.
    pub l1: Vec<f64>,
    /// `||grad u||_2`.
    pub h1semi: Vec<f64>,
    /// `max |u|`.
    pub sup_abs: Vec<f64>,
    /// `Im int f conj(u) dx`.
    pub forcing_work: Vec<f64>,
    pub boundary_frac: Vec<f64>,
}

impl DiagSeries {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            times: Vec::with_capacity(n),
            mass_sq: Vec::with_capacity(n),
            l1: Vec::with_capacity(n),
            h1semi: Vec::with_capacity(n),
            sup_abs: Vec::with_capacity(n),
            forcing_work: Vec::with_capacity(n),
            boundary_frac: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Appends the diagnostics of `u` at time `t`, with `f = f(t)`.
    pub fn record(&mut self, t: f64, u: &ComplexField, f: &[Complex64], shell: usize) {
        let grid = u.grid();
        let w = grid.cell_volume();
        let v = u.values();
        self.times.push(t);
        self.mass_sq
            .push(v.iter().map(|z| z.norm_sqr()).sum::<f64>() * w);
        self.l1.push(raw_norm(grid, v, NormKind::L1));
        self.h1semi.push(h1_semi_sq(grid, v).sqrt());
        self.sup_abs.push(raw_norm(grid, v, NormKind::Linf));
        self.forcing_work
            .push(f.iter().zip(v).map(|(a, b)| (a * b.conj()).im).sum::<f64>() * w);
        self.boundary_frac.push(boundary_mass_fraction(u, shell));
    }

    /// `||u(t_i)||_2` for every sample.
    pub fn l2(&self) -> Vec<f64> {
        self.mass_sq.iter().map(|m| m.sqrt()).collect()
    }

    pub fn validate(&self) -> Result<(), DiagError> {
        let n = self.times.len();
        let lens = [
            self.mass_sq.len(),
            self.l1.len(),
            self.h1semi.len(),
            self.sup_abs.len(),
            self.forcing_work.len(),
            self.boundary_frac.len(),
        ];
        if lens.iter().any(|l| *l != n) {
            return Err(DiagError::InvalidSeries("columns differ in length".into()));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(DiagError::InvalidSeries(
                "times must be strictly increasing".into(),
            ));
        }
        if self.mass_sq.iter().any(|m| !(*m >= 0.0)) {
            return Err(DiagError::InvalidSeries("mass_sq must be non-negative".into()));
        }
        Ok(())
    }

    fn require_nonempty(&self) -> Result<(), DiagError> {
        if self.is_empty() {
            Err(DiagError::EmptySeries)
        } else {
            Ok(())
        }
    }
}

/// Cumulative trapezoidal integral of `ys` over `ts`, starting at 0.
pub fn cumulative_trapezoid(ts: &[f64], ys: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(ts.len());
    for i in 0..ts.len() {
        if i > 0 {
            acc += 0.5 * (ts[i] - ts[i - 1]) * (ys[i] + ys[i - 1]);
        }
        out.push(acc);
    }
    out
}

/// `r(t) = ½||u(t)||² - ½||u0||² + mu int l1 - int forcing_work`, with
/// trapezoidal time quadrature. Zero for exact solutions.
pub fn mass_balance_residual(series: &DiagSeries, mu: f64) -> Result<Vec<f64>, DiagError> {
    series.require_nonempty()?;
    let l1 = cumulative_trapezoid(&series.times, &series.l1);
    let work = cumulative_trapezoid(&series.times, &series.forcing_work);
    let m0 = series.mass_sq[0];
    Ok((0..series.len())
        .map(|i| 0.5 * (series.mass_sq[i] - m0) + mu * l1[i] - work[i])
        .collect())
}

/// Gagliardo–Nirenberg quotient
/// `||u||_2^{(N+2)/2} / (||u||_1 ||grad u||_2^{N/2})`.
pub fn gn_ratio(u: &ComplexField) -> Result<f64, DiagError> {
    let grid = u.grid();
    if !u.is_finite() {
        return Err(DiagError::DegenerateInput("non-finite field".into()));
    }
    let n = grid.dim() as f64;
    let l2 = raw_norm(grid, u.values(), NormKind::L2);
    let l1 = raw_norm(grid, u.values(), NormKind::L1);
    let grad = raw_norm(grid, u.values(), NormKind::H1Semi);
    if l1 == 0.0 || grad == 0.0 {
        return Err(DiagError::DegenerateInput("zero field".into()));
    }
    Ok(l2.powf((n + 2.0) / 2.0) / (l1 * grad.powf(n / 2.0)))
}

/// Earliest sample time after which `||u||_2 <= tol` holds for the rest of
/// the series; `None` if the last sample is above `tol`.
pub fn extinction_time(series: &DiagSeries, tol: f64) -> Result<Option<f64>, DiagError> {
    series.require_nonempty()?;
    if !(tol > 0.0) {
        return Err(DiagError::InvalidParameter(format!("tol must be positive (got {tol})")));
    }
    match series.mass_sq.iter().rposition(|m| m.sqrt() > tol) {
        None => Ok(Some(series.times[0])),
        Some(i) if i + 1 == series.len() => Ok(None),
        Some(i) => Ok(Some(series.times[i + 1])),
    }
}

/// Shape of the decay bound, by dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundForm {
    /// `(u0^{1/2} - c t)_+^2`, reaching zero in finite time.
    SqrtLinear,
    /// `u0 exp(-c t)`.
    Exponential,
    /// `u0 / (1 + c u0^{(N-2)/2} t)^{2/(N-2)}`.
    Algebraic,
}

impl BoundForm {
    pub fn for_dim(dim: usize) -> Self {
        match dim {
            1 => BoundForm::SqrtLinear,
            2 => BoundForm::Exponential,
            _ => BoundForm::Algebraic,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BoundForm::SqrtLinear => "sqrt_linear",
            BoundForm::Exponential => "exponential",
            BoundForm::Algebraic => "algebraic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCurveParams {
    pub dim: usize,
    pub c: f64,
    /// `||u(t0)||_2`.
    pub u_t0: f64,
    pub t0: f64,
}

impl BoundCurveParams {
    pub fn form(&self) -> BoundForm {
        BoundForm::for_dim(self.dim)
    }
}

/// Evaluates the dimension-appropriate decay bound at `t >= t0`.
pub fn bound_curve(params: &BoundCurveParams, t: f64) -> Result<f64, DiagError> {
    if t < params.t0 {
        return Err(DiagError::InvalidTime { t, t0: params.t0 });
    }
    if params.dim == 0 || !(params.u_t0 >= 0.0) {
        return Err(DiagError::InvalidParameter(format!("{params:?}")));
    }
    let tau = t - params.t0;
    let (u0, c) = (params.u_t0, params.c);
    Ok(match params.form() {
        BoundForm::SqrtLinear => (u0.sqrt() - c * tau).max(0.0).powi(2),
        BoundForm::Exponential => u0 * (-c * tau).exp(),
        BoundForm::Algebraic => {
            let k = (params.dim as f64 - 2.0) / 2.0;
            u0 / (1.0 + c * u0.powf(k) * tau).powf(1.0 / k)
        }
    })
}

/// Minimum sample count for [`fit_decay_constant`].
pub const MIN_FIT_SAMPLES: usize = 10;

/// Largest `c` for which the decay bound started at the first sample with
/// `t >= t0` dominates `||u(t)||_2` at every later sample. The bound touches
/// the data at the minimizing sample.
pub fn fit_decay_constant(
    series: &DiagSeries,
    dim: usize,
    t0: f64,
) -> Result<BoundCurveParams, DiagError> {
    series.require_nonempty()?;
    if dim == 0 {
        return Err(DiagError::InvalidParameter("dim must be positive".into()));
    }
    let start = series
        .times
        .iter()
        .position(|t| *t >= t0 - 1e-12 * t0.abs().max(1.0))
        .ok_or_else(|| DiagError::InsufficientData(format!("no samples at t >= {t0}")))?;
    let l2 = series.l2();
    let (ref_t, u0) = (series.times[start], l2[start]);
    let positive = (start..series.len()).filter(|&i| l2[i] > 0.0).count();
    if positive < MIN_FIT_SAMPLES || u0 <= 0.0 {
        return Err(DiagError::InsufficientData(format!(
            "{positive} samples with positive mass after t0 = {t0}, need {MIN_FIT_SAMPLES}"
        )));
    }
    let form = BoundForm::for_dim(dim);
    let k = (dim as f64 - 2.0) / 2.0;
    let c = (start + 1..series.len())
        .filter(|&i| l2[i] > 0.0)
        .map(|i| {
            let tau = series.times[i] - ref_t;
            let u = l2[i];
            match form {
                BoundForm::SqrtLinear => (u0.sqrt() - u.sqrt()) / tau,
                BoundForm::Exponential => -(u / u0).ln() / tau,
                BoundForm::Algebraic => ((u0 / u).powf(k) - 1.0) / (u0.powf(k) * tau),
            }
        })
        .fold(f64::INFINITY, f64::min);
    if !(c > 0.0) || !c.is_finite() {
        return Err(DiagError::NoPositiveConstant { c });
    }
    Ok(BoundCurveParams {
        dim,
        c,
        u_t0: u0,
        t0: ref_t,
    })
}

/// Ordinary least squares `y = slope x + intercept`, with the coefficient
/// of determination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit, DiagError> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(DiagError::InsufficientData(
            "need at least three paired samples".into(),
        ));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(DiagError::DegenerateInput("constant abscissa".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Slack granted to the a-priori bound.
pub const A_PRIORI_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub ok: bool,
    /// Largest excess over the bound (negative when strictly satisfied).
    pub max_violation: f64,
    pub slack: f64,
}

/// `||u(t)||_2 <= ||u0||_2 + int_0^t ||f(s)||_2 ds` at every sample.
pub fn a_priori_check(series: &DiagSeries, model: &Model) -> Result<CheckReport, DiagError> {
    series.require_nonempty()?;
    let grid = model.grid;
    let mut buf = vec![Complex64::new(0.0, 0.0); grid.len()];
    let f_norms: Vec<f64> = series
        .times
        .iter()
        .map(|&t| {
            model.forcing.eval_into(t, &mut buf);
            raw_norm(&grid, &buf, NormKind::L2)
        })
        .collect();
    let integral = cumulative_trapezoid(&series.times, &f_norms);
    let u0 = series.mass_sq[0].sqrt();
    let max_violation = series
        .mass_sq
        .iter()
        .zip(&integral)
        .map(|(m, int)| m.sqrt() - (u0 + int))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(CheckReport {
        ok: max_violation <= A_PRIORI_SLACK,
        max_violation,
        slack: A_PRIORI_SLACK,
    })
}

/// Checks `d(t) <= d(s) + int_s^t ||f - f~|| + slack` for every pair of
/// output times `s <= t`, where `d = ||u - u~||_2`. The slack is
/// `1e-8 + 2 dt max ||f - f~||_2`.
pub fn continuous_dependence_check(
    series_a: &DiagSeries,
    series_b: &DiagSeries,
    field_diffs: &[f64],
    forcing_diffs: &[f64],
) -> Result<CheckReport, DiagError> {
    series_a.require_nonempty()?;
    let n = series_a.len();
    let same_times = series_b.len() == n
        && series_a
            .times
            .iter()
            .zip(&series_b.times)
            .all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(1.0));
    if !same_times || field_diffs.len() != n || forcing_diffs.len() != n {
        return Err(DiagError::GridMismatch);
    }
    let dt = series_a
        .times
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max);
    let max_df = forcing_diffs.iter().copied().fold(0.0, f64::max);
    let slack = 1e-8 + 2.0 * dt * max_df;
    let cum = cumulative_trapezoid(&series_a.times, forcing_diffs);
    // With g = d - F the condition reads g(t) <= min_{s <= t} g(s) + slack.
    let mut running_min = f64::INFINITY;
    let mut max_violation = 0.0f64;
    for (d, big_f) in field_diffs.iter().zip(&cum) {
        let g = d - big_f;
        running_min = running_min.min(g);
        max_violation = max_violation.max(g - running_min);
    }
    Ok(CheckReport {
        ok: max_violation <= slack,
        max_violation,
        slack,
    })
}

/// Maximum of `||u||_2` over the final `tail_fraction` of the samples.
pub fn stabilization_check(series: &DiagSeries, tail_fraction: f64) -> Result<f64, DiagError> {
    series.require_nonempty()?;
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(DiagError::InvalidParameter(format!(
            "tail_fraction must lie in (0, 1] (got {tail_fraction})"
        )));
    }
    let n = series.len();
    let start = ((n as f64) * (1.0 - tail_fraction)).floor() as usize;
    Ok(series.mass_sq[start.min(n - 1)..]
        .iter()
        .map(|m| m.sqrt())
        .fold(0.0, f64::max))
}

/// Summary of a run, written as JSON next to the series CSV.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub extinction_time: Option<f64>,
    pub fitted_c: Option<f64>,
    pub bound_form: Option<String>,
    pub a_priori_ok: bool,
    pub mass_residual_max: f64,
    pub cross_validation_sup: Option<f64>,
}

/// Extinction threshold relative to `||u0||_2` used in run reports.
pub const EXTINCTION_REL_TOL: f64 = 1e-12;

impl RunReport {
    /// Report for a single run: extinction at `1e-12 ||u0||_2`, the decay
    /// fit from `t = 0` when one exists, the a-priori check and the largest
    /// mass-balance residual.
    pub fn from_series(series: &DiagSeries, model: &Model) -> Result<Self, DiagError> {
        series.validate()?;
        series.require_nonempty()?;
        let u0 = series.mass_sq[0].sqrt();
        let extinction = if u0 == 0.0 {
            Some(series.times[0])
        } else {
            extinction_time(series, EXTINCTION_REL_TOL * u0)?
        };
        let dim = model.grid.dim();
        let fit = fit_decay_constant(series, dim, series.times[0]).ok();
        let residual = mass_balance_residual(series, model.mu)?;
        Ok(RunReport {
            extinction_time: extinction,
            fitted_c: fit.map(|p| p.c),
            bound_form: fit.map(|_| BoundForm::for_dim(dim).name().to_string()),
            a_priori_ok: a_priori_check(series, model)?.ok,
            mass_residual_max: residual.iter().fold(0.0, |m, r| m.max(r.abs())),
            cross_validation_sup: None,
        })
    }
}
