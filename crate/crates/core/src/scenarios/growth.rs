use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ScenarioError;
use crate::diagnostics::{cumulative_trapezoid, DiagSeries};
use crate::grid::{raw_norm, NormKind};
use crate::model::Model;

/// Slack of the gradient bound when `grad V = 0`.
pub const GRADIENT_BOUND_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthBranch {
    /// `grad V = 0`: `||grad u(t)|| <= ||grad u0|| + int ||grad f||`.
    Gradient,
    /// General `V`: `||u(t)||_{H^1} <= (||u0||_{H^1} + int ||f||_{H^1}) e^{C G t}`
    /// with `G = ||grad V||_{L^inf + L^{p_V}}`.
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct H1GrowthReport {
    pub ok: bool,
    pub branch: GrowthBranch,
    /// Largest excess over the bound (gradient branch only).
    pub max_violation: Option<f64>,
    /// Smallest admissible growth constant `C` (exponential branch only).
    pub growth_constant: Option<f64>,
    pub gradient_norm: f64,
}

/// Checks the `H^1` growth bound along a recorded series.
pub fn h1_growth_check(series: &DiagSeries, model: &Model) -> Result<H1GrowthReport, ScenarioError> {
    let n = series.len();
    if n == 0 || series.h1semi.len() != n || series.mass_sq.len() != n {
        return Err(ScenarioError::MissingDiagnostics(
            "series lacks h1_seminorm samples".into(),
        ));
    }
    let grid = model.grid;
    let mut buf = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut f_grad = Vec::with_capacity(n);
    let mut f_l2 = Vec::with_capacity(n);
    for &t in &series.times {
        model.forcing.eval_into(t, &mut buf);
        f_grad.push(raw_norm(&grid, &buf, NormKind::H1Semi));
        f_l2.push(raw_norm(&grid, &buf, NormKind::L2));
    }

    if model.potential.is_constant() {
        let integral = cumulative_trapezoid(&series.times, &f_grad);
        let g0 = series.h1semi[0];
        let max_violation = series
            .h1semi
            .iter()
            .zip(&integral)
            .map(|(g, int)| g - (g0 + int))
            .fold(f64::NEG_INFINITY, f64::max);
        return Ok(H1GrowthReport {
            ok: max_violation <= GRADIENT_BOUND_SLACK,
            branch: GrowthBranch::Gradient,
            max_violation: Some(max_violation),
            growth_constant: None,
            gradient_norm: 0.0,
        });
    }

    let f_h1: Vec<f64> = f_grad.iter().zip(&f_l2).map(|(a, b)| a.hypot(*b)).collect();
    let integral = cumulative_trapezoid(&series.times, &f_h1);
    let h1: Vec<f64> = series
        .h1semi
        .iter()
        .zip(&series.mass_sq)
        .map(|(g, m)| (g * g + m).sqrt())
        .collect();
    let gradient_norm = model.potential.gradient_split_norm();
    let (t0, a0) = (series.times[0], h1[0]);
    let mut c = f64::NEG_INFINITY;
    for i in 1..n {
        let tau = series.times[i] - t0;
        let envelope = a0 + integral[i];
        if h1[i] == 0.0 {
            continue;
        }
        if envelope <= 0.0 {
            c = f64::INFINITY;
            break;
        }
        c = c.max((h1[i] / envelope).ln() / (gradient_norm * tau));
    }
    if c == f64::NEG_INFINITY {
        // Nothing to bound after the first sample.
        c = 0.0;
    }
    Ok(H1GrowthReport {
        ok: c.is_finite(),
        branch: GrowthBranch::Exponential,
        max_violation: None,
        growth_constant: Some(c),
        gradient_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{ComplexField, Grid};
    use crate::model::{FieldSpec, ModelSpec, PotentialSpec, PotentialTerm};

    fn record(series: &mut DiagSeries, t: f64, u: &ComplexField) {
        let f = vec![Complex64::new(0.0, 0.0); u.grid().len()];
        series.record(t, u, &f, 1);
    }

    #[test]
    fn zero_run_passes_trivially() {
        let grid = Grid::new(1, 1.0, 16).unwrap();
        let model = ModelSpec::free(1.0).build(&grid).unwrap();
        let mut s = DiagSeries::default();
        for k in 0..4 {
            record(&mut s, k as f64 * 0.1, &ComplexField::zeros(grid));
        }
        let r = h1_growth_check(&s, &model).unwrap();
        assert_eq!(r.branch, GrowthBranch::Gradient);
        assert_eq!(r.max_violation, Some(0.0));
        assert!(r.ok);
    }

    #[test]
    fn gradient_growth_without_forcing_fails() {
        let grid = Grid::new(1, 4.0, 64).unwrap();
        let model = ModelSpec::free(1.0).build(&grid).unwrap();
        let mut s = DiagSeries::default();
        record(&mut s, 0.0, &FieldSpec::gaussian(1.0, vec![0.0], 1.0).sample(&grid).unwrap());
        record(&mut s, 0.1, &FieldSpec::gaussian(1.0, vec![0.0], 0.5).sample(&grid).unwrap());
        let r = h1_growth_check(&s, &model).unwrap();
        assert!(!r.ok);
        assert!(r.max_violation.unwrap() > 0.1);
    }

    #[test]
    fn exponential_branch_recovers_rate() {
        let grid = Grid::new(1, 4.0, 64).unwrap();
        let model = ModelSpec {
            potential: PotentialSpec {
                v1: PotentialTerm::Well {
                    depth: 1.0,
                    width: 1.0,
                },
                ..PotentialSpec::zero()
            },
            ..ModelSpec::free(1.0)
        }
        .build(&grid)
        .unwrap();
        let g = model.potential.gradient_split_norm();
        assert!(g > 0.0);
        let u0 = FieldSpec::gaussian(1.0, vec![0.0], 1.0).sample(&grid).unwrap();
        let mut s = DiagSeries::default();
        let c = 0.3;
        for k in 0..5 {
            let t = 0.25 * k as f64;
            record(&mut s, t, &u0.scaled(Complex64::new((c * g * t).exp(), 0.0)));
        }
        let r = h1_growth_check(&s, &model).unwrap();
        assert_eq!(r.branch, GrowthBranch::Exponential);
        assert!((r.growth_constant.unwrap() - c).abs() < 1e-12);
    }

    #[test]
    fn empty_series_is_missing() {
        let grid = Grid::new(1, 1.0, 16).unwrap();
        let model = ModelSpec::free(1.0).build(&grid).unwrap();
        assert!(matches!(
            h1_growth_check(&DiagSeries::default(), &model),
            Err(ScenarioError::MissingDiagnostics(_))
        ));
    }
}
