//! Time integration.
//!
//! Two schemes are provided:
//!
//! * **Strang splitting** (`linear(dt/2) ∘ damping(dt) ∘ linear(dt/2)`): the
//!   linear Schrödinger part is advanced by Crank–Nicolson, the pointwise
//!   saturated damping `ż = -mu z/|z| - i f` is advanced per node, exactly
//!   when `f = 0`, so that finite-time extinction happens inside a step
//!   without any regularization.
//! * **Implicit Euler on the regularized equation**, where `u/|u|` is
//!   replaced by `u/(|u|^2 + eps)^{1/2}` and the monotone implicit equation
//!   is solved by a lagged-coefficient fixed point.

mod config;
mod damping;
mod implicit;
mod linear;
mod simulation;
mod strang;

use thiserror::Error;

pub use config::{Scheme, SolverConfig, DEFAULT_ZERO_TOL_FACTOR};
pub use damping::{damping_substep, SaturatedDamping};
pub use implicit::{backward_euler_step, ImplicitStats};
pub use linear::linear_half_step;
pub use simulation::{
    cross_validate, default_zero_tol, run, run_pair, PairOutput, RunOutput, SimState, Simulation,
    Snapshot,
};
pub use strang::strang_step;

use crate::grid::GridError;
use crate::linalg::LinearSolveError;
use crate::model::ModelError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    LinearSolveDiverged(#[from] LinearSolveError),
    #[error("fixed-point iteration did not converge in {iterations} sweeps (last increment {increment:e})")]
    FixedPointDiverged { iterations: usize, increment: f64 },
    #[error("domain truncation invalid at t = {t}: boundary mass fraction {fraction:e} exceeds {threshold:e}")]
    TruncationInvalid { t: f64, fraction: f64, threshold: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Grid(#[from] GridError),
}
