//! Potential, forcing, the saturating nonlinearity and its regularization.

mod forcing;
mod potential;
mod section;
mod shape;

use thiserror::Error;

pub use forcing::{eval_forcing, Amplitude, Forcing, ForcingKind, ForcingSpec};
pub use potential::{
    potential_exponent, potential_l2_bound_ratio, validate_potential, Potential, PotentialSpec,
    PotentialTerm,
};
pub use section::{
    g_eps, monotonicity_pairing, saturated_section, section_value, SaturatedSection,
    SECTION_MODULUS_SLACK,
};
pub use shape::{FieldShape, FieldSpec};

use crate::grid::{Grid, GridError};
use crate::linalg::Hamiltonian;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid potential exponent: {0}")]
    InvalidExponent(String),
    #[error("potential samples must be real-valued")]
    ComplexPotential,
    #[error("input contains non-finite values")]
    NonFiniteInput,
    #[error("fields are defined on different grids")]
    GridMismatch,
    #[error("section modulus {max_modulus} exceeds 1")]
    InvalidSection { max_modulus: f64 },
    #[error("field is identically zero")]
    ZeroField,
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("unknown kind `{0}`")]
    UnknownKind(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("could not load `{path}`: {reason}")]
    Load { path: String, reason: String },
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Model description independent of any grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub mu: f64,
    pub potential: PotentialSpec,
    pub forcing: ForcingSpec,
}

impl ModelSpec {
    /// Unforced, potential-free model with damping `mu`.
    pub fn free(mu: f64) -> Self {
        Self {
            mu,
            potential: PotentialSpec::zero(),
            forcing: ForcingSpec::zero(),
        }
    }

    /// Samples the model on `grid`. `mu = 0` is accepted so that unitary
    /// control runs can share the code path.
    pub fn build(&self, grid: &Grid) -> Result<Model, ModelError> {
        if !(self.mu.is_finite() && self.mu >= 0.0) {
            return Err(ModelError::InvalidParameter(format!(
                "mu must be non-negative (got {})",
                self.mu
            )));
        }
        let potential = validate_potential(&self.potential, grid)?;
        let forcing = self.forcing.build(grid, self.mu)?;
        let hamiltonian = Hamiltonian::new(*grid, potential.total());
        Ok(Model {
            grid: *grid,
            mu: self.mu,
            potential,
            forcing,
            hamiltonian,
        })
    }
}

/// A model sampled on a grid, ready for time stepping.
#[derive(Debug, Clone)]
pub struct Model {
    pub grid: Grid,
    pub mu: f64,
    pub potential: Potential,
    pub forcing: Forcing,
    pub hamiltonian: Hamiltonian,
}

impl Model {
    /// Replaces the Hamiltonian by its potential-only part (no Laplacian).
    pub fn without_kinetic(mut self) -> Self {
        self.hamiltonian = self.hamiltonian.without_kinetic();
        self
    }
}
