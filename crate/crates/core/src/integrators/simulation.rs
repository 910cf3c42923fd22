use num_complex::Complex64;

use super::implicit::backward_euler_step_with_stats;
use super::{strang_step, Scheme, SolverConfig, SolverError, DEFAULT_ZERO_TOL_FACTOR};
use crate::diagnostics::DiagSeries;
use crate::grid::{raw_norm, ComplexField, NormKind};
use crate::model::{saturated_section, section_value, Model, SaturatedSection};

/// Solution state after `step_count` steps; `t = step_count * dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub u: ComplexField,
    /// Saturated section of the most recent step.
    pub section: SaturatedSection,
    pub step_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub step: usize,
    pub field: ComplexField,
}

/// `1e-14 * max(1, sup |u0|)`.
pub fn default_zero_tol(u0: &ComplexField) -> f64 {
    let sup = raw_norm(u0.grid(), u0.values(), NormKind::Linf);
    DEFAULT_ZERO_TOL_FACTOR * sup.max(1.0)
}

pub(crate) fn resolved_zero_tol(config: &SolverConfig, u: &ComplexField) -> f64 {
    config.zero_tol.unwrap_or_else(|| default_zero_tol(u))
}

/// A single time-stepping run, advanced one step at a time.
#[derive(Debug, Clone)]
pub struct Simulation<'a> {
    model: &'a Model,
    config: SolverConfig,
    state: SimState,
    max_fp_iterations: usize,
}

impl<'a> Simulation<'a> {
    /// Validates the inputs and fixes the zero threshold from `u0` when the
    /// configuration leaves it open.
    pub fn new(
        model: &'a Model,
        config: &SolverConfig,
        u0: &ComplexField,
    ) -> Result<Self, SolverError> {
        config.validate()?;
        if *u0.grid() != model.grid {
            return Err(crate::grid::GridError::GridMismatch.into());
        }
        if !u0.is_finite() {
            return Err(crate::grid::GridError::NonFiniteInput.into());
        }
        let mut config = config.clone();
        let zero_tol = resolved_zero_tol(&config, u0);
        config.zero_tol = Some(zero_tol);
        let f0 = model.forcing.eval(0.0);
        let section = saturated_section(u0, &f0, model.mu, zero_tol)?;
        Ok(Self {
            model,
            config,
            state: SimState {
                t: 0.0,
                u: u0.clone(),
                section,
                step_count: 0,
            },
            max_fp_iterations: 0,
        })
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn model(&self) -> &Model {
        self.model
    }

    pub fn zero_tol(&self) -> f64 {
        self.config.zero_tol.unwrap_or(DEFAULT_ZERO_TOL_FACTOR)
    }

    /// Largest fixed-point sweep count seen so far (implicit scheme only).
    pub fn max_fixed_point_iterations(&self) -> usize {
        self.max_fp_iterations
    }

    pub fn is_finished(&self) -> bool {
        self.state.step_count >= self.config.n_steps()
    }

    pub fn step(&mut self) -> Result<(), SolverError> {
        self.state = match self.config.scheme {
            Scheme::Strang => strang_step(&self.state, self.model, &self.config)?,
            Scheme::BackwardEulerReg => {
                let (next, stats) =
                    backward_euler_step_with_stats(&self.state, self.model, &self.config)?;
                self.max_fp_iterations = self.max_fp_iterations.max(stats.iterations);
                next
            }
        };
        Ok(())
    }

    pub fn into_state(self) -> SimState {
        self.state
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub series: DiagSeries,
    pub snapshots: Vec<Snapshot>,
    pub final_state: SimState,
    /// Per output time, `max |i mu U - f|` over zero-set nodes (0 when the
    /// zero set is empty). Vanishes exactly when the stationary balance on
    /// the zero set is solvable.
    pub section_balance: Vec<f64>,
    pub max_fixed_point_iterations: usize,
    pub zero_tol: f64,
}

/// Records diagnostics at `t = 0` and after every step.
struct Recorder {
    series: DiagSeries,
    snapshots: Vec<Snapshot>,
    section_balance: Vec<f64>,
    forcing: Vec<Complex64>,
    shell: usize,
    threshold: f64,
    stride: usize,
}

impl Recorder {
    fn new(sim: &Simulation<'_>) -> Self {
        let grid = sim.model.grid;
        let cfg = sim.config();
        let n = cfg.n_steps() + 1;
        Self {
            series: DiagSeries::with_capacity(n),
            snapshots: Vec::new(),
            section_balance: Vec::with_capacity(n),
            forcing: vec![Complex64::new(0.0, 0.0); grid.len()],
            shell: cfg
                .boundary_shell
                .unwrap_or_else(|| (grid.points_per_dim() / 16).max(1)),
            threshold: cfg.boundary_fail_threshold,
            stride: cfg.snapshot_stride,
        }
    }

    fn record(&mut self, sim: &Simulation<'_>) -> Result<(), SolverError> {
        let state = sim.state();
        let model = sim.model;
        model.forcing.eval_into(state.t, &mut self.forcing);
        self.series
            .record(state.t, &state.u, &self.forcing, self.shell);
        let frac = *self.series.boundary_frac.last().unwrap_or(&0.0);
        if frac > self.threshold {
            return Err(SolverError::TruncationInvalid {
                t: state.t,
                fraction: frac,
                threshold: self.threshold,
            });
        }
        let zero_tol = sim.zero_tol();
        let i_mu = Complex64::new(0.0, model.mu);
        let balance = state
            .u
            .values()
            .iter()
            .zip(&self.forcing)
            .filter_map(|(u, f)| {
                let (s, on_zero) = section_value(*u, *f, model.mu, zero_tol);
                on_zero.then(|| (i_mu * s - f).norm())
            })
            .fold(0.0, f64::max);
        self.section_balance.push(balance);
        if self.stride > 0 && state.step_count.is_multiple_of(self.stride) {
            self.snapshots.push(Snapshot {
                t: state.t,
                step: state.step_count,
                field: state.u.clone(),
            });
        }
        Ok(())
    }

    fn finish(self, sim: Simulation<'_>) -> RunOutput {
        RunOutput {
            series: self.series,
            snapshots: self.snapshots,
            section_balance: self.section_balance,
            max_fixed_point_iterations: sim.max_fixed_point_iterations(),
            zero_tol: sim.zero_tol(),
            final_state: sim.into_state(),
        }
    }
}

/// Integrates from `u0` to `t_end`, recording diagnostics after every step.
/// Aborts with `TruncationInvalid` once the boundary shell carries more
/// than `boundary_fail_threshold` of the mass.
pub fn run(model: &Model, config: &SolverConfig, u0: &ComplexField) -> Result<RunOutput, SolverError> {
    let mut sim = Simulation::new(model, config, u0)?;
    let mut rec = Recorder::new(&sim);
    rec.record(&sim)?;
    while !sim.is_finished() {
        sim.step()?;
        rec.record(&sim)?;
    }
    Ok(rec.finish(sim))
}

/// Two runs on the same grid and time step, advanced in lockstep.
#[derive(Debug, Clone, PartialEq)]
pub struct PairOutput {
    pub a: RunOutput,
    pub b: RunOutput,
    /// `||u_a(t_n) - u_b(t_n)||_2` at every output time.
    pub field_diffs: Vec<f64>,
    /// `||f_a(t_n) - f_b(t_n)||_2` at every output time.
    pub forcing_diffs: Vec<f64>,
}

pub fn run_pair(
    model_a: &Model,
    model_b: &Model,
    config: &SolverConfig,
    u0_a: &ComplexField,
    u0_b: &ComplexField,
) -> Result<PairOutput, SolverError> {
    if model_a.grid != model_b.grid {
        return Err(crate::grid::GridError::GridMismatch.into());
    }
    let grid = model_a.grid;
    let mut sa = Simulation::new(model_a, config, u0_a)?;
    let mut sb = Simulation::new(model_b, config, u0_b)?;
    let mut ra = Recorder::new(&sa);
    let mut rb = Recorder::new(&sb);
    let mut field_diffs = Vec::new();
    let mut forcing_diffs = Vec::new();
    loop {
        ra.record(&sa)?;
        rb.record(&sb)?;
        let d = sa.state().u.sub(&sb.state().u)?;
        field_diffs.push(raw_norm(&grid, d.values(), NormKind::L2));
        let df: Vec<Complex64> = ra.forcing.iter().zip(&rb.forcing).map(|(p, q)| p - q).collect();
        forcing_diffs.push(raw_norm(&grid, &df, NormKind::L2));
        if sa.is_finished() {
            break;
        }
        sa.step()?;
        sb.step()?;
    }
    Ok(PairOutput {
        a: ra.finish(sa),
        b: rb.finish(sb),
        field_diffs,
        forcing_diffs,
    })
}

/// Sup over common output times of `||u_A(t) - u_B(t)||_2`.
///
/// Common output times are the multiples of the larger time step, which
/// must be an integer multiple of the smaller one.
pub fn cross_validate(
    model: &Model,
    config_a: &SolverConfig,
    config_b: &SolverConfig,
    u0: &ComplexField,
) -> Result<f64, SolverError> {
    config_a.validate()?;
    config_b.validate()?;
    let span = config_a.t_end.max(config_b.t_end);
    if (config_a.t_end - config_b.t_end).abs() > 1e-12 * span {
        return Err(SolverError::InvalidConfig(
            "cross-validated runs must share t_end".into(),
        ));
    }
    let interval = config_a.dt.max(config_b.dt);
    let ratio = |dt: f64| -> Result<usize, SolverError> {
        let r = interval / dt;
        let k = r.round();
        if (r - k).abs() > 1e-9 * r {
            return Err(SolverError::InvalidConfig(format!(
                "time steps {} and {} are incommensurate",
                config_a.dt, config_b.dt
            )));
        }
        Ok(k as usize)
    };
    let (ka, kb) = (ratio(config_a.dt)?, ratio(config_b.dt)?);
    let mut sa = Simulation::new(model, config_a, u0)?;
    let mut sb = Simulation::new(model, config_b, u0)?;
    let grid = model.grid;
    let mut sup = 0.0f64;
    while !sa.is_finished() && !sb.is_finished() {
        for _ in 0..ka {
            sa.step()?;
        }
        for _ in 0..kb {
            sb.step()?;
        }
        let d = sa.state().u.sub(&sb.state().u)?;
        sup = sup.max(raw_norm(&grid, d.values(), NormKind::L2));
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{norm, Grid};
    use crate::model::{FieldSpec, ModelSpec, PotentialSpec, PotentialTerm};

    fn grid() -> Grid {
        Grid::new(1, 6.0, 128).unwrap()
    }

    fn bump(amplitude: f64) -> ComplexField {
        FieldSpec::sin_bump(amplitude, 0.0, 1.0).sample(&grid()).unwrap()
    }

    #[test]
    fn zero_run_is_zero() {
        let model = ModelSpec::free(1.0).build(&grid()).unwrap();
        for cfg in [
            SolverConfig::strang(1e-2, 0.2),
            SolverConfig::backward_euler(1e-2, 0.2, 1e-8),
        ] {
            let out = run(&model, &cfg, &ComplexField::zeros(grid())).unwrap();
            assert_eq!(out.series.len(), 21);
            assert!(out.series.mass_sq.iter().all(|m| *m == 0.0));
            assert!(out.series.l1.iter().all(|m| *m == 0.0));
            assert!(out.final_state.u.is_zero());
        }
    }

    #[test]
    fn unitary_without_damping() {
        let spec = ModelSpec {
            potential: PotentialSpec {
                v1: PotentialTerm::Well {
                    depth: 2.0,
                    width: 1.0,
                },
                ..PotentialSpec::zero()
            },
            ..ModelSpec::free(0.0)
        };
        let model = spec.build(&grid()).unwrap();
        let mut cfg = SolverConfig::strang(1e-2, 1.0);
        cfg.boundary_fail_threshold = 1.0;
        let out = run(&model, &cfg, &bump(1.0)).unwrap();
        let m0 = out.series.mass_sq[0];
        assert!(out.series.mass_sq.iter().all(|m| (m - m0).abs() <= 1e-10 * m0));
    }

    #[test]
    fn strang_dissipates_and_time_is_exact() {
        let model = ModelSpec::free(1.0).build(&grid()).unwrap();
        let out = run(&model, &SolverConfig::strang(1e-2, 0.5), &bump(1.0)).unwrap();
        for w in out.series.mass_sq.windows(2) {
            assert!(w[1] < w[0]);
        }
        assert!((out.final_state.t - 0.5).abs() < 1e-12);
        assert_eq!(out.final_state.step_count, 50);
    }

    #[test]
    fn truncation_detected() {
        let g = Grid::new(1, 1.2, 64).unwrap();
        let model = ModelSpec::free(0.0).build(&g).unwrap();
        let u0 = FieldSpec::gaussian(1.0, vec![0.0], 0.5).sample(&g).unwrap();
        assert!(matches!(
            run(&model, &SolverConfig::strang(1e-2, 0.1), &u0),
            Err(SolverError::TruncationInvalid { .. })
        ));
    }

    #[test]
    fn stays_extinct() {
        let model = ModelSpec::free(1.0).build(&grid()).unwrap();
        let out = run(&model, &SolverConfig::strang(1e-2, 3.0), &bump(0.5)).unwrap();
        let first_zero = out.series.mass_sq.iter().position(|m| *m == 0.0).unwrap();
        assert!(out.series.mass_sq[first_zero..].iter().all(|m| *m == 0.0));
    }

    #[test]
    fn cross_validate_identical_is_zero() {
        let model = ModelSpec::free(1.0).build(&grid()).unwrap();
        let cfg = SolverConfig::strang(1e-2, 0.3);
        assert_eq!(cross_validate(&model, &cfg, &cfg, &bump(1.0)).unwrap(), 0.0);
        let bad = SolverConfig::strang(3e-3, 0.3);
        assert!(cross_validate(&model, &cfg, &bad, &bump(1.0)).is_err());
    }

    #[test]
    fn strang_self_convergence() {
        let model = ModelSpec::free(0.5).build(&grid()).unwrap();
        let u0 = FieldSpec::gaussian(1.0, vec![0.0], 1.0).sample(&grid()).unwrap();
        let d = |a: f64, b: f64| {
            cross_validate(
                &model,
                &SolverConfig::strang(a, 0.4),
                &SolverConfig::strang(b, 0.4),
                &u0,
            )
            .unwrap()
        };
        let coarse = d(2e-2, 1e-2);
        let fine = d(1e-2, 5e-3);
        // at least first order; the damping is not smooth where |u| -> 0
        assert!(coarse / fine >= 1.8, "ratio {}", coarse / fine);
    }

    #[test]
    fn pair_contracts_without_forcing() {
        let model = ModelSpec::free(1.0).build(&grid()).unwrap();
        let out = run_pair(&model, &model, &SolverConfig::strang(1e-2, 0.5), &bump(1.0), &bump(0.7)).unwrap();
        let d0 = out.field_diffs[0];
        assert!(out.field_diffs.iter().all(|d| *d <= d0 + 1e-12));
        assert!(out.forcing_diffs.iter().all(|d| *d == 0.0));
        let direct = norm(&bump(1.0).sub(&bump(0.7)).unwrap(), NormKind::L2).unwrap();
        assert!((d0 - direct).abs() < 1e-15);
    }
}
