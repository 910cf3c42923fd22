use num_complex::Complex64;

use super::SolverError;
use crate::grid::ComplexField;
use crate::linalg::{Hamiltonian, Shift};

/// Crank–Nicolson step of `u_t = i H u` over `dt_half`:
/// `(I - i dt_half/2 H) u+ = (I + i dt_half/2 H) u`.
///
/// The Cayley transform is unitary for real potentials, so the `L^2` norm
/// is preserved up to the linear solver tolerance.
pub fn linear_half_step(
    u: &ComplexField,
    hamiltonian: &Hamiltonian,
    dt_half: f64,
    tol: f64,
) -> Result<ComplexField, SolverError> {
    u.check_same_grid(&ComplexField::zeros(*hamiltonian.grid()))?;
    let mut out = u.clone();
    cayley_into(u.values(), hamiltonian, dt_half, tol, out.values_mut())?;
    Ok(out)
}

/// `x` must hold an initial guess (typically `u`) on entry.
pub(crate) fn cayley_into(
    u: &[Complex64],
    hamiltonian: &Hamiltonian,
    dt_half: f64,
    tol: f64,
    x: &mut [Complex64],
) -> Result<(), SolverError> {
    let a = 0.5 * dt_half;
    let mut rhs = vec![Complex64::new(0.0, 0.0); u.len()];
    // (I + i a H) u = 2u - (I - i a H) u
    hamiltonian.apply_shifted(Shift::Scalar(1.0), a, u, &mut rhs);
    for (r, z) in rhs.iter_mut().zip(u) {
        *r = 2.0 * z - *r;
    }
    hamiltonian.solve_shifted(Shift::Scalar(1.0), a, &rhs, tol, x)?;
    Ok(())
}
