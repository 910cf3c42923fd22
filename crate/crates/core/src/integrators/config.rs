use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SolverError;

/// Relative machine zero: nodes with `|u| <= 1e-14 * max(1, sup|u0|)` are
/// treated as lying on the zero set.
pub const DEFAULT_ZERO_TOL_FACTOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Strang,
    BackwardEulerReg,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Strang => "strang",
            Scheme::BackwardEulerReg => "backward_euler_reg",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = SolverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strang" => Ok(Scheme::Strang),
            "backward_euler_reg" => Ok(Scheme::BackwardEulerReg),
            other => Err(SolverError::InvalidConfig(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub scheme: Scheme,
    pub dt: f64,
    /// Regularization of `u/|u|`; required positive for the implicit scheme.
    pub eps: f64,
    pub t_end: f64,
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    pub linsolve_tol: f64,
    /// Keep a field snapshot every this many steps; 0 disables snapshots.
    pub snapshot_stride: usize,
    pub boundary_fail_threshold: f64,
    /// Width in nodes of the monitored boundary shell; `None` uses `M/16`.
    pub boundary_shell: Option<usize>,
    /// `None` derives the zero threshold from the initial datum.
    pub zero_tol: Option<f64>,
}

impl SolverConfig {
    pub fn strang(dt: f64, t_end: f64) -> Self {
        Self {
            scheme: Scheme::Strang,
            dt,
            eps: 1e-8,
            t_end,
            fp_tol: 1e-10,
            fp_max_iter: 200,
            linsolve_tol: 1e-12,
            snapshot_stride: 0,
            boundary_fail_threshold: 1e-6,
            boundary_shell: None,
            zero_tol: None,
        }
    }

    pub fn backward_euler(dt: f64, t_end: f64, eps: f64) -> Self {
        Self {
            scheme: Scheme::BackwardEulerReg,
            eps,
            ..Self::strang(dt, t_end)
        }
    }

    pub fn with_snapshot_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |msg: String| Err(SolverError::InvalidConfig(msg));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt must be positive (got {})", self.dt));
        }
        if !(self.t_end.is_finite() && self.t_end >= self.dt) {
            return bad(format!("t_end must be at least dt (got {})", self.t_end));
        }
        if !(self.eps.is_finite() && self.eps >= 0.0) {
            return bad(format!("eps must be non-negative (got {})", self.eps));
        }
        if self.scheme == Scheme::BackwardEulerReg && self.eps <= 0.0 {
            return bad("backward_euler_reg requires eps > 0".into());
        }
        if !(self.fp_tol > 0.0) || self.fp_max_iter == 0 {
            return bad("fixed-point tolerance and iteration cap must be positive".into());
        }
        if !(self.linsolve_tol > 0.0) {
            return bad("linsolve_tol must be positive".into());
        }
        if !(self.boundary_fail_threshold > 0.0) {
            return bad("boundary_fail_threshold must be positive".into());
        }
        if let Some(z) = self.zero_tol {
            if !(z.is_finite() && z > 0.0) {
                return bad(format!("zero_tol must be positive (got {z})"));
            }
        }
        Ok(())
    }

    /// Number of steps, `round(t_end / dt)`.
    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}
