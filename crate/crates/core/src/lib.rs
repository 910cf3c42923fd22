//! Simulation and diagnostics for the Schrödinger equation with saturated
//! damping
//!
//! ```text
//! i u_t + Δu + V(x) u + i mu u/|u| = f(t, x)
//! ```
//!
//! on a truncated box with homogeneous Dirichlet closure.
//!
//! * [`grid`]: uniform grids, complex fields, discrete norms and the Laplacian.
//! * [`model`]: potential, forcing and the saturated section `U ~ u/|u|`.
//! * [`integrators`]: Strang splitting with an exact damping sub-flow, and
//!   implicit Euler on the regularized equation.
//! * [`diagnostics`]: mass balance, extinction time, decay-bound fitting.
//! * [`rnp`]: weighted `Y_n` norms, the mollifier/cutoff approximation and a
//!   non-differentiable `L^inf`-valued path.
//! * [`scenarios`]: the named scenario catalog.
//! * [`io`]: CSV formats for fields and series.

pub mod diagnostics;
pub mod grid;
pub mod integrators;
pub mod io;
pub mod linalg;
pub mod model;
pub mod rnp;
pub mod scenarios;

pub use num_complex::Complex64;

pub use diagnostics::{
    a_priori_check, bound_curve, continuous_dependence_check, extinction_time,
    fit_decay_constant, gn_ratio, mass_balance_residual, stabilization_check, BoundCurveParams,
    BoundForm, DiagError, DiagSeries, RunReport,
};
pub use grid::{make_grid, norm, ComplexField, Grid, GridError, NormKind};
pub use integrators::{
    cross_validate, run, RunOutput, Scheme, SimState, SolverConfig, SolverError,
};
pub use io::IoError;
pub use model::{Model, ModelError, ModelSpec};
pub use scenarios::{catalog, h1_growth_check, run_scenario, Scenario, ScenarioError, ScenarioReport};
