use num_complex::Complex64;

use super::linear::cayley_into;
use super::simulation::{resolved_zero_tol, SimState};
use super::{SaturatedDamping, SolverConfig, SolverError};
use crate::model::{saturated_section, Model};

/// One Strang step: linear `dt/2`, pointwise damping `dt` with the forcing
/// frozen at the midpoint, linear `dt/2`. The section is taken on the
/// post-damping field.
pub fn strang_step(
    state: &SimState,
    model: &Model,
    config: &SolverConfig,
) -> Result<SimState, SolverError> {
    let zero_tol = resolved_zero_tol(config, &state.u);
    let dt = config.dt;
    let h = &model.hamiltonian;

    let mut work = state.u.clone();
    cayley_into(state.u.values(), h, 0.5 * dt, config.linsolve_tol, work.values_mut())?;

    let t_mid = state.t + 0.5 * dt;
    let f_mid = model.forcing.eval(t_mid);
    let damping = SaturatedDamping::new(model.mu, zero_tol);
    let mut damped = work.clone();
    for ((z, f), out) in work.values().iter().zip(f_mid.values()).zip(damped.values_mut()) {
        *out = damping.advance(*z, *f, dt);
    }
    let section = saturated_section(&damped, &f_mid, model.mu, zero_tol)?;

    let mut next = damped.clone();
    if damped.values().iter().any(|z| *z != Complex64::new(0.0, 0.0)) {
        cayley_into(damped.values(), h, 0.5 * dt, config.linsolve_tol, next.values_mut())?;
    }

    let step_count = state.step_count + 1;
    Ok(SimState {
        t: step_count as f64 * dt,
        u: next,
        section,
        step_count,
    })
}
