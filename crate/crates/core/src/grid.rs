//! Uniform Dirichlet box discretization and field-level primitives.
//!
//! The box `[-L, L]^N` is sampled at interior points only: with `M` points
//! per axis the spacing is `h = 2L / (M + 1)` and the (implicit) boundary
//! nodes carry the homogeneous Dirichlet value zero. All quadratures are the
//! rectangle rule `sum * h^N`, which is what makes the discrete energy
//! identities exact for the three-point stencil.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest admissible number of interior points per axis.
pub const MIN_POINTS_PER_DIM: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("dimension must be 1, 2 or 3 (got {0})")]
    InvalidDimension(usize),
    #[error("invalid grid size: {0}")]
    InvalidSize(String),
    #[error("field contains non-finite values")]
    NonFiniteInput,
    #[error("fields are defined on different grids")]
    GridMismatch,
    #[error("expected {expected} values for this grid, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
}

/// Uniform interior-point grid on `[-L, L]^N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    half_width: f64,
    points_per_dim: usize,
    spacing: f64,
}

/// Builds a grid, see [`Grid::new`].
pub fn make_grid(dim: usize, half_width: f64, points_per_dim: usize) -> Result<Grid, GridError> {
    Grid::new(dim, half_width, points_per_dim)
}

impl Grid {
    pub fn new(dim: usize, half_width: f64, points_per_dim: usize) -> Result<Self, GridError> {
        if !(1..=3).contains(&dim) {
            return Err(GridError::InvalidDimension(dim));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(GridError::InvalidSize(format!(
                "half_width must be positive and finite (got {half_width})"
            )));
        }
        if points_per_dim < MIN_POINTS_PER_DIM {
            return Err(GridError::InvalidSize(format!(
                "points_per_dim must be at least {MIN_POINTS_PER_DIM} (got {points_per_dim})"
            )));
        }
        Ok(Self {
            dim,
            half_width,
            points_per_dim,
            spacing: 2.0 * half_width / (points_per_dim as f64 + 1.0),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points_per_dim(&self) -> usize {
        self.points_per_dim
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Total number of interior points, `M^N`.
    pub fn len(&self) -> usize {
        self.points_per_dim.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `h^N` of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    /// Coordinate of the `i`-th interior node along any axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 1.0) * self.spacing
    }

    /// Flat-index stride of axis `axis` (row-major, last axis fastest).
    pub fn stride(&self, axis: usize) -> usize {
        self.points_per_dim.pow((self.dim - 1 - axis) as u32)
    }

    /// Per-axis indices of a flat index; unused axes are zero.
    pub fn multi_index(&self, flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        for (axis, slot) in idx.iter_mut().enumerate().take(self.dim) {
            *slot = (flat / self.stride(axis)) % self.points_per_dim;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .take(self.dim)
            .enumerate()
            .map(|(axis, &i)| i * self.stride(axis))
            .sum()
    }

    /// Physical position of a flat index; unused axes are zero.
    pub fn position(&self, flat: usize) -> [f64; 3] {
        let idx = self.multi_index(flat);
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = self.coordinate(idx[axis]);
        }
        x
    }

    /// Euclidean distance of a node from the origin.
    pub fn radius(&self, flat: usize) -> f64 {
        let x = self.position(flat);
        x.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// Complex-valued samples on the interior nodes of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<Complex64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::ShapeMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if !values.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(GridError::NonFiniteInput);
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at every node; `f` receives the node position (first `N`
    /// entries meaningful).
    pub fn from_fn(grid: Grid, mut f: impl FnMut(&[f64]) -> Complex64) -> Self {
        let values = (0..grid.len())
            .map(|i| {
                let x = grid.position(i);
                f(&x[..grid.dim()])
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|z| z * c).collect(),
        }
    }

    /// `self - other`, pointwise.
    pub fn sub(&self, other: &Self) -> Result<Self, GridError> {
        self.check_same_grid(other)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<(), GridError> {
        if self.grid != other.grid {
            return Err(GridError::GridMismatch);
        }
        Ok(())
    }

    fn ensure_finite(&self) -> Result<(), GridError> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(GridError::NonFiniteInput)
        }
    }
}

/// Norms used by the diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormKind {
    L2,
    L1,
    Linf,
    /// `||grad u||_2` from forward differences with zero ghost values.
    H1Semi,
}

/// Applies the Dirichlet second-difference Laplacian to raw samples.
pub(crate) fn laplacian_into(grid: &Grid, u: &[Complex64], out: &mut [Complex64]) {
    let m = grid.points_per_dim();
    let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    out.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
    for axis in 0..grid.dim() {
        let s = grid.stride(axis);
        for (i, o) in out.iter_mut().enumerate() {
            let c = (i / s) % m;
            let left = if c > 0 { u[i - s] } else { Complex64::new(0.0, 0.0) };
            let right = if c + 1 < m { u[i + s] } else { Complex64::new(0.0, 0.0) };
            *o += (left - 2.0 * u[i] + right) * inv_h2;
        }
    }
}

/// Second-order central-difference Laplacian with homogeneous Dirichlet
/// closure (3/5/7-point stencil in 1/2/3 dimensions).
pub fn laplacian(u: &ComplexField) -> Result<ComplexField, GridError> {
    u.ensure_finite()?;
    let mut out = ComplexField::zeros(u.grid);
    laplacian_into(&u.grid, &u.values, &mut out.values);
    Ok(out)
}

pub(crate) fn h1_semi_sq(grid: &Grid, u: &[Complex64]) -> f64 {
    let m = grid.points_per_dim();
    let mut acc = 0.0;
    for axis in 0..grid.dim() {
        let s = grid.stride(axis);
        for (i, z) in u.iter().enumerate() {
            let c = (i / s) % m;
            let left = if c > 0 { u[i - s] } else { Complex64::new(0.0, 0.0) };
            acc += (z - left).norm_sqr();
            if c + 1 == m {
                acc += z.norm_sqr();
            }
        }
    }
    acc / (grid.spacing() * grid.spacing()) * grid.cell_volume()
}

pub(crate) fn raw_norm(grid: &Grid, u: &[Complex64], kind: NormKind) -> f64 {
    let w = grid.cell_volume();
    match kind {
        NormKind::L2 => (u.iter().map(|z| z.norm_sqr()).sum::<f64>() * w).sqrt(),
        NormKind::L1 => u.iter().map(|z| z.norm()).sum::<f64>() * w,
        NormKind::Linf => u.iter().map(|z| z.norm()).fold(0.0, f64::max),
        NormKind::H1Semi => h1_semi_sq(grid, u).sqrt(),
    }
}

/// Discrete norm of `u`.
pub fn norm(u: &ComplexField, kind: NormKind) -> Result<f64, GridError> {
    u.ensure_finite()?;
    Ok(raw_norm(&u.grid, &u.values, kind))
}

pub(crate) fn raw_inner(grid: &Grid, u: &[Complex64], v: &[Complex64]) -> f64 {
    u.iter()
        .zip(v)
        .map(|(a, b)| (a * b.conj()).re)
        .sum::<f64>()
        * grid.cell_volume()
}

/// Real `L^2` inner product `Re sum u conj(v) h^N`.
pub fn inner_l2(u: &ComplexField, v: &ComplexField) -> Result<f64, GridError> {
    u.check_same_grid(v)?;
    Ok(raw_inner(&u.grid, &u.values, &v.values))
}

/// Fraction of the `L^2` mass carried by the outermost `shell_width` layers
/// of the box. Monitors the truncation of an unbounded domain.
pub fn boundary_mass_fraction(u: &ComplexField, shell_width: usize) -> f64 {
    let grid = &u.grid;
    let m = grid.points_per_dim();
    let mut total = 0.0;
    let mut shell = 0.0;
    for (i, z) in u.values.iter().enumerate() {
        let mass = z.norm_sqr();
        if mass == 0.0 {
            continue;
        }
        total += mass;
        let idx = grid.multi_index(i);
        let in_shell = idx[..grid.dim()]
            .iter()
            .any(|&c| c < shell_width || c + shell_width >= m);
        if in_shell {
            shell += mass;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        shell / total
    }
}
