use std::collections::VecDeque;

use num_complex::Complex64;

use super::simulation::{resolved_zero_tol, SimState};
use super::{SolverConfig, SolverError};
use crate::grid::raw_norm;
use crate::grid::NormKind;
use crate::linalg::Shift;
use crate::model::{saturated_section, Model};

/// Depth of the Anderson mixing history.
const ANDERSON_DEPTH: usize = 5;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ImplicitStats {
    pub iterations: usize,
    /// `L^2` distance between the last two iterates.
    pub increment: f64,
}

/// Implicit Euler step of the regularized equation
/// `u+ = u + dt (i H u+ - mu g_eps(u+) - i f(t+dt))`.
///
/// Each sweep freezes the damping coefficient `mu / (|w|^2 + eps)^{1/2}` at
/// the current iterate `w` and solves the linear system
/// `((1 + dt mu / (|w|^2 + eps)^{1/2}) I - i dt H) w+ = u - i dt f`;
/// the sweeps are accelerated by Anderson mixing. Iteration stops when
/// consecutive iterates differ by at most `fp_tol` in `L^2`.
pub fn backward_euler_step(
    state: &SimState,
    model: &Model,
    config: &SolverConfig,
) -> Result<SimState, SolverError> {
    backward_euler_step_with_stats(state, model, config).map(|(s, _)| s)
}

pub(crate) fn backward_euler_step_with_stats(
    state: &SimState,
    model: &Model,
    config: &SolverConfig,
) -> Result<(SimState, ImplicitStats), SolverError> {
    if !(config.eps > 0.0) {
        return Err(SolverError::InvalidConfig(
            "backward_euler_reg requires eps > 0".into(),
        ));
    }
    let grid = model.grid;
    let dt = config.dt;
    let zero_tol = resolved_zero_tol(config, &state.u);
    let step_count = state.step_count + 1;
    let t_new = step_count as f64 * dt;
    let f_new = model.forcing.eval(t_new);
    let i = Complex64::new(0.0, 1.0);
    let b: Vec<Complex64> = state
        .u
        .values()
        .iter()
        .zip(f_new.values())
        .map(|(u, f)| u - i * dt * f)
        .collect();

    let n = b.len();
    let mut x = state.u.values().to_vec();
    let mut coeff = vec![0.0; n];
    let mut g = vec![Complex64::new(0.0, 0.0); n];
    let mut history: VecDeque<(Vec<Complex64>, Vec<Complex64>)> = VecDeque::new();
    let mut prev: Option<(Vec<Complex64>, Vec<Complex64>)> = None;
    let mut prev_res = f64::INFINITY;
    let mut res = f64::INFINITY;

    for k in 1..=config.fp_max_iter {
        for (c, w) in coeff.iter_mut().zip(&x) {
            *c = 1.0 + dt * model.mu / (w.norm_sqr() + config.eps).sqrt();
        }
        g.copy_from_slice(&x);
        model
            .hamiltonian
            .solve_shifted(Shift::Diagonal(&coeff), dt, &b, config.linsolve_tol, &mut g)?;
        let r: Vec<Complex64> = g.iter().zip(&x).map(|(a, b)| a - b).collect();
        res = raw_norm(&grid, &r, NormKind::L2);
        if res <= config.fp_tol {
            let u = crate::grid::ComplexField::from_values(grid, g)?;
            let section = saturated_section(&u, &f_new, model.mu, zero_tol)?;
            let stats = ImplicitStats {
                iterations: k,
                increment: res,
            };
            return Ok((
                SimState {
                    t: t_new,
                    u,
                    section,
                    step_count,
                },
                stats,
            ));
        }
        if !res.is_finite() {
            break;
        }
        // Anderson mixing falls back to the plain sweep whenever the
        // residual fails to decrease.
        if res >= prev_res {
            history.clear();
            prev = None;
        }
        if let Some((pr, pg)) = prev.take() {
            let dr: Vec<Complex64> = r.iter().zip(&pr).map(|(a, b)| a - b).collect();
            let dg: Vec<Complex64> = g.iter().zip(&pg).map(|(a, b)| a - b).collect();
            history.push_back((dr, dg));
            if history.len() > ANDERSON_DEPTH {
                history.pop_front();
            }
        }
        prev_res = res;
        x.copy_from_slice(&g);
        if let Some(gamma) = anderson_coefficients(&history, &r) {
            for (gam, (_, dg)) in gamma.iter().zip(&history) {
                for (xi, d) in x.iter_mut().zip(dg) {
                    *xi -= *gam * d;
                }
            }
        }
        prev = Some((r, g.clone()));
    }
    Err(SolverError::FixedPointDiverged {
        iterations: config.fp_max_iter,
        increment: res,
    })
}

fn real_dot(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p.re * q.re + p.im * q.im).sum()
}

/// Real least-squares coefficients `argmin |r - sum_j gamma_j dr_j|`, by
/// normal equations with a small Tikhonov shift. `None` when the history is
/// empty or degenerate.
fn anderson_coefficients(
    history: &VecDeque<(Vec<Complex64>, Vec<Complex64>)>,
    r: &[Complex64],
) -> Option<Vec<f64>> {
    let m = history.len();
    if m == 0 {
        return None;
    }
    let mut a = vec![vec![0.0; m + 1]; m];
    for i in 0..m {
        for j in 0..=i {
            let v = real_dot(&history[i].0, &history[j].0);
            a[i][j] = v;
            a[j][i] = v;
        }
        a[i][m] = real_dot(&history[i].0, r);
    }
    let trace: f64 = (0..m).map(|i| a[i][i]).sum();
    if !(trace > 0.0) {
        return None;
    }
    for (i, row) in a.iter_mut().enumerate() {
        row[i] += 1e-12 * trace;
    }
    // Gaussian elimination with partial pivoting on the augmented matrix.
    for col in 0..m {
        let piv = (col..m).max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))?;
        if a[piv][col].abs() == 0.0 {
            return None;
        }
        a.swap(col, piv);
        for row in col + 1..m {
            let factor = a[row][col] / a[col][col];
            let (upper, lower) = a.split_at_mut(row);
            for (x, p) in lower[0][col..=m].iter_mut().zip(&upper[col][col..=m]) {
                *x -= factor * p;
            }
        }
    }
    let mut gamma = vec![0.0; m];
    for row in (0..m).rev() {
        let tail: f64 = (row + 1..m).map(|k| a[row][k] * gamma[k]).sum();
        gamma[row] = (a[row][m] - tail) / a[row][row];
    }
    gamma.iter().all(|g| g.is_finite()).then_some(gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{ComplexField, Grid};
    use crate::integrators::{Simulation, SolverConfig};
    use crate::model::ModelSpec;

    /// Decoupled nodes: no Laplacian, no potential.
    fn pointwise_model(mu: f64) -> Model {
        let grid = Grid::new(1, 1.0, 8).unwrap();
        ModelSpec::free(mu).build(&grid).unwrap().without_kinetic()
    }

    #[test]
    fn zero_converges_in_one_sweep() {
        let grid = Grid::new(1, 2.0, 32).unwrap();
        let model = ModelSpec::free(1.0).build(&grid).unwrap();
        let cfg = SolverConfig::backward_euler(1e-2, 1.0, 1e-8);
        let sim = Simulation::new(&model, &cfg, &ComplexField::zeros(grid)).unwrap();
        let (next, stats) = backward_euler_step_with_stats(sim.state(), &model, &cfg).unwrap();
        assert!(next.u.is_zero());
        assert_eq!(stats.iterations, 1);
    }

    #[test]
    fn scalar_root() {
        let model = pointwise_model(1.0);
        let grid = model.grid;
        let u0 = ComplexField::from_values(grid, vec![Complex64::new(1.0, 0.0); 8]).unwrap();
        let cfg = SolverConfig::backward_euler(0.5, 1.0, 1e-16);
        let sim = Simulation::new(&model, &cfg, &u0).unwrap();
        let next = backward_euler_step(sim.state(), &model, &cfg).unwrap();
        assert!(next.u.values().iter().all(|z| (z - Complex64::new(0.5, 0.0)).norm() < 1e-6));
    }

    #[test]
    fn scalar_extinction_inside_step() {
        // u+ (1 + dt mu / |u+|) = u has no positive root once dt mu > u;
        // the regularized root is O(sqrt(eps)).
        let model = pointwise_model(1.0);
        let grid = model.grid;
        let u0 = ComplexField::from_values(grid, vec![Complex64::new(0.3, 0.0); 8]).unwrap();
        let cfg = SolverConfig::backward_euler(0.5, 1.0, 1e-12);
        let sim = Simulation::new(&model, &cfg, &u0).unwrap();
        let next = backward_euler_step(sim.state(), &model, &cfg).unwrap();
        assert!(next.u.values().iter().all(|z| z.norm() < 1e-6));
    }

    #[test]
    fn anderson_solves_small_least_squares() {
        let c = |x: f64| Complex64::new(x, 0.0);
        let mut h = VecDeque::new();
        h.push_back((vec![c(1.0), c(0.0)], vec![]));
        h.push_back((vec![c(0.0), c(2.0)], vec![]));
        let g = anderson_coefficients(&h, &[c(3.0), c(4.0)]).unwrap();
        assert!((g[0] - 3.0).abs() < 1e-9 && (g[1] - 2.0).abs() < 1e-9);
    }
}
