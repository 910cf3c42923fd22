//! Weighted norms `Y_n` approximating `L^1`, a mollifier/cutoff
//! approximation scheme and an `L^inf`-valued path without a derivative.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{raw_norm, ComplexField, Grid, GridError, NormKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RnpError {
    #[error("input contains non-finite values")]
    NonFiniteInput,
    #[error("operation is only defined in one dimension (got {0})")]
    UnsupportedDimension(usize),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Surface measure of the unit sphere in `R^N` (`2` on the line).
pub fn sphere_measure(dim: usize) -> Result<f64, RnpError> {
    match dim {
        1 => Ok(2.0),
        2 => Ok(2.0 * PI),
        3 => Ok(4.0 * PI),
        d => Err(RnpError::UnsupportedDimension(d)),
    }
}

/// Parameters of the `n`-th weighted norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YnSpec {
    pub n: usize,
    pub dim: usize,
    /// `1 / n`.
    pub eps_n: f64,
    pub omega: f64,
}

impl YnSpec {
    pub fn new(n: usize, dim: usize) -> Result<Self, RnpError> {
        if n == 0 {
            return Err(RnpError::InvalidParameter("n must be at least 1".into()));
        }
        Ok(Self {
            n,
            dim,
            eps_n: 1.0 / n as f64,
            omega: sphere_measure(dim)?,
        })
    }

    /// Exponent of the weight `|x|^{eps (N + eps)}` outside the ball `|x| <= n`.
    pub fn weight_exponent(&self) -> f64 {
        self.eps_n * (self.dim as f64 + self.eps_n)
    }
}

fn check_finite(f: &ComplexField) -> Result<(), RnpError> {
    if f.is_finite() {
        Ok(())
    } else {
        Err(RnpError::NonFiniteInput)
    }
}

/// `||f||_{Y_n} = (2 omega n^N)^{1/(n+1)} (int_{|x|<=n} |f|^{1+eps} +
/// int_{|x|>n} |f|^{1+eps} |x|^{eps (N+eps)})^{1/(1+eps)}`, `eps = 1/n`,
/// by the rectangle rule at the grid nodes. Mass outside the box is dropped.
pub fn yn_norm(f: &ComplexField, n: usize) -> Result<f64, RnpError> {
    check_finite(f)?;
    let grid = f.grid();
    let spec = YnSpec::new(n, grid.dim())?;
    let p = 1.0 + spec.eps_n;
    let radius = n as f64;
    let w = spec.weight_exponent();
    let integral: f64 = f
        .values()
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let a = z.norm();
            if a == 0.0 {
                return 0.0;
            }
            let r = grid.radius(i);
            let weight = if r <= radius { 1.0 } else { r.powf(w) };
            a.powf(p) * weight
        })
        .sum::<f64>()
        * grid.cell_volume();
    let prefactor = (2.0 * spec.omega * radius.powi(grid.dim() as i32)).powf(1.0 / (radius + 1.0));
    Ok(prefactor * integral.powf(1.0 / p))
}

/// `||f||_{Y_0} = max(||f||_{Y_1}, int |f| |x|^{N+1})`.
pub fn y0_norm(f: &ComplexField) -> Result<f64, RnpError> {
    let y1 = yn_norm(f, 1)?;
    let grid = f.grid();
    let w = YnSpec::new(1, grid.dim())?.weight_exponent();
    let moment = f
        .values()
        .iter()
        .enumerate()
        .map(|(i, z)| z.norm() * grid.radius(i).powf(w))
        .sum::<f64>()
        * grid.cell_volume();
    Ok(y1.max(moment))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YnEntry {
    pub n: usize,
    pub yn_norm: f64,
    pub l1_norm: f64,
    /// `||f||_{Y_n} - ||f||_{L^1}`.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub entries: Vec<YnEntry>,
    /// `||f||_1 <= ||f||_{Y_n} (1 + 1e-8)` for every `n`.
    pub dominated: bool,
    /// Gaps are non-increasing along the list.
    pub monotone: bool,
    /// The last gap is at most the supplied cap.
    pub final_gap_ok: bool,
}

impl AxiomReport {
    pub fn ok(&self) -> bool {
        self.dominated && self.monotone && self.final_gap_ok
    }
}

/// Relative quadrature slack on `||f||_1 <= ||f||_{Y_n}`.
pub const DOMINATION_SLACK: f64 = 1e-8;

/// `Y_n` norms and gaps for every `n` in `n_list`.
pub fn yn_table(f: &ComplexField, n_list: &[usize]) -> Result<Vec<YnEntry>, RnpError> {
    check_finite(f)?;
    let l1 = raw_norm(f.grid(), f.values(), NormKind::L1);
    n_list
        .iter()
        .map(|&n| {
            let y = yn_norm(f, n)?;
            Ok(YnEntry {
                n,
                yn_norm: y,
                l1_norm: l1,
                gap: y - l1,
            })
        })
        .collect()
}

/// Checks domination by `L^1`, monotone gaps and the final gap against
/// `gap_cap`. `n_list` must be strictly increasing.
pub fn yn_axiom_check(
    f: &ComplexField,
    n_list: &[usize],
    gap_cap: f64,
) -> Result<AxiomReport, RnpError> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(RnpError::InvalidParameter(
            "n_list must be non-empty and strictly increasing".into(),
        ));
    }
    let entries = yn_table(f, n_list)?;
    let dominated = entries
        .iter()
        .all(|e| e.l1_norm <= e.yn_norm * (1.0 + DOMINATION_SLACK));
    let monotone = entries
        .windows(2)
        .all(|w| w[1].gap <= w[0].gap + 1e-12 * w[0].gap.abs().max(1.0));
    let final_gap_ok = entries.last().is_none_or(|e| e.gap <= gap_cap);
    Ok(AxiomReport {
        entries,
        dominated,
        monotone,
        final_gap_ok,
    })
}

/// Normalization of `exp(-1/(1-x^2))` on `(-1, 1)`.
pub const MOLLIFIER_NORMALIZATION: f64 = 2.252_283_621_043_581;

/// Standard bump `rho(x) = c exp(-1/(1-x^2))` for `|x| < 1`, unit integral.
pub fn standard_bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        MOLLIFIER_NORMALIZATION * (-1.0 / (1.0 - x * x)).exp()
    }
}

/// Smooth cutoff: 1 on `[-n, n]`, 0 outside `[-(n+1), n+1]`, cubic
/// smoothstep in between.
pub fn cutoff(x: f64, n: f64) -> f64 {
    let s = x.abs() - n;
    if s <= 0.0 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        1.0 - s * s * (3.0 - 2.0 * s)
    }
}

/// `rho_ell * (xi_n u)` with `rho_ell(x) = ell rho(ell x)`, on a
/// one-dimensional grid. The sampled kernel is renormalized to unit sum,
/// so the discrete `L^1` norm cannot grow; values beyond the box are zero.
pub fn mollify(u: &ComplexField, ell: usize, n_cut: usize) -> Result<ComplexField, RnpError> {
    let grid = *u.grid();
    if grid.dim() != 1 {
        return Err(RnpError::UnsupportedDimension(grid.dim()));
    }
    if ell == 0 || n_cut == 0 {
        return Err(RnpError::InvalidParameter(
            "ell and n_cut must be at least 1".into(),
        ));
    }
    check_finite(u)?;
    let h = grid.spacing();
    let ell = ell as f64;
    let reach = ((1.0 / ell) / h).ceil() as usize;
    let mut kernel: Vec<f64> = (0..=2 * reach)
        .map(|k| ell * standard_bump(ell * (k as f64 - reach as f64) * h))
        .collect();
    let total: f64 = kernel.iter().sum();
    if total > 0.0 {
        kernel.iter_mut().for_each(|w| *w /= total);
    } else {
        // support narrower than one cell: the identity
        kernel.iter_mut().for_each(|w| *w = 0.0);
        kernel[reach] = 1.0;
    }
    let cut: Vec<Complex64> = u
        .values()
        .iter()
        .enumerate()
        .map(|(i, z)| z * cutoff(grid.coordinate(i), n_cut as f64))
        .collect();
    let m = cut.len();
    let out: Vec<Complex64> = (0..m)
        .map(|i| {
            let lo = i.saturating_sub(reach);
            let hi = (i + reach).min(m - 1);
            (lo..=hi)
                .map(|j| cut[j] * kernel[j + reach - i])
                .sum::<Complex64>()
        })
        .collect();
    Ok(ComplexField::from_values(grid, out)?)
}

/// Derivative `x -> sign(t+x) / (1 + (t+x)^2)` of the path
/// `t -> arctan|t + .|`, with `sign(0) = 0`.
pub fn arctan_path_derivative(t: f64, x: f64) -> f64 {
    let y = t + x;
    let sign = if y > 0.0 {
        1.0
    } else if y < 0.0 {
        -1.0
    } else {
        0.0
    };
    sign / (1.0 + y * y)
}

/// Separating point for the pair `(t, s)`, `t > s`: `1 - t` when
/// `t - s >= 2`, the midpoint `-(t + s)/2` otherwise.
pub fn separation_witness(t: f64, s: f64) -> f64 {
    let (t, s) = if t >= s { (t, s) } else { (s, t) };
    if t - s >= 2.0 {
        1.0 - t
    } else {
        -(t + s) / 2.0
    }
}

/// `sup_x |u'(t)(x) - u'(s)(x)|` over the grid nodes and the witness point.
/// At least `1/2` for every `t != s`.
pub fn arctan_counterexample_sep(t: f64, s: f64, grid: &Grid) -> Result<f64, RnpError> {
    if grid.dim() != 1 {
        return Err(RnpError::UnsupportedDimension(grid.dim()));
    }
    if !(t.is_finite() && s.is_finite()) {
        return Err(RnpError::NonFiniteInput);
    }
    if t == s {
        return Err(RnpError::DegenerateInput("t and s coincide".into()));
    }
    let witness = separation_witness(t, s);
    if witness.abs() > grid.half_width() {
        return Err(RnpError::InvalidParameter(format!(
            "witness point {witness} lies outside the box"
        )));
    }
    let diff = |x: f64| (arctan_path_derivative(t, x) - arctan_path_derivative(s, x)).abs();
    Ok((0..grid.len())
        .map(|i| diff(grid.coordinate(i)))
        .fold(diff(witness), f64::max))
}
