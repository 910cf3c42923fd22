use std::path::PathBuf;

use num_complex::Complex64;

use super::shape::positive;
use super::ModelError;
use crate::grid::{raw_norm, ComplexField, Grid, NormKind};
use crate::io::load_field_csv;

/// One summand of the potential `V = V1 + V2`.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialTerm {
    Zero,
    Constant {
        value: f64,
    },
    /// Gaussian well `depth * exp(-|x|^2 / (2 width^2))`.
    Well {
        depth: f64,
        width: f64,
    },
    /// `strength / max(|x|, core)^power`.
    InversePower {
        strength: f64,
        power: f64,
        core: f64,
    },
    /// Field snapshot CSV; the imaginary column must vanish.
    File {
        path: PathBuf,
    },
    /// Samples in grid order; the imaginary parts must vanish.
    Samples {
        values: Vec<Complex64>,
    },
}

impl PotentialTerm {
    fn sample(&self, grid: &Grid) -> Result<Vec<f64>, ModelError> {
        let complex = match self {
            PotentialTerm::Zero => return Ok(vec![0.0; grid.len()]),
            PotentialTerm::Constant { value } => return Ok(vec![*value; grid.len()]),
            PotentialTerm::Well { depth, width } => {
                positive("well width", *width)?;
                return Ok((0..grid.len())
                    .map(|i| depth * (-grid.radius(i).powi(2) / (2.0 * width * width)).exp())
                    .collect());
            }
            PotentialTerm::InversePower {
                strength,
                power,
                core,
            } => {
                positive("core radius", *core)?;
                positive("power", *power)?;
                return Ok((0..grid.len())
                    .map(|i| strength / grid.radius(i).max(*core).powf(*power))
                    .collect());
            }
            PotentialTerm::File { path } => load_field_csv(path, *grid)
                .map_err(|e| ModelError::Load {
                    path: path.display().to_string(),
                    reason: e.to_string(),
                })?
                .into_values(),
            PotentialTerm::Samples { values } => {
                ComplexField::from_values(*grid, values.clone())?.into_values()
            }
        };
        if complex.iter().any(|z| z.im != 0.0) {
            return Err(ModelError::ComplexPotential);
        }
        Ok(complex.into_iter().map(|z| z.re).collect())
    }
}

/// `V = V1 + V2` with `V1` bounded and `V2` in `L^{p_V}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    pub v1: PotentialTerm,
    pub v2: PotentialTerm,
    /// Integrability margin, only meaningful in two dimensions.
    pub beta: Option<f64>,
}

impl PotentialSpec {
    pub fn zero() -> Self {
        Self {
            v1: PotentialTerm::Zero,
            v2: PotentialTerm::Zero,
            beta: None,
        }
    }
}

/// Default integrability margin in two dimensions when none is given.
const DEFAULT_BETA: f64 = 1.0;

/// Integrability exponent of the `V2` part: 2 for `N = 1`, `2 + beta` for
/// `N = 2` (`beta > 0`), `N` for `N >= 3`.
pub fn potential_exponent(dim: usize, beta: Option<f64>) -> Result<f64, ModelError> {
    match dim {
        1 => Ok(2.0),
        2 => {
            let beta = beta.unwrap_or(DEFAULT_BETA);
            if beta.is_finite() && beta > 0.0 {
                Ok(2.0 + beta)
            } else {
                Err(ModelError::InvalidExponent(format!(
                    "beta must be positive in two dimensions (got {beta})"
                )))
            }
        }
        d if d >= 3 => Ok(d as f64),
        d => Err(ModelError::InvalidExponent(format!("dimension {d}"))),
    }
}

/// A validated potential sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    grid: Grid,
    v1: Vec<f64>,
    v2: Vec<f64>,
    p_v: f64,
}

/// Checks the exponent rule and realness, and samples both parts.
pub fn validate_potential(spec: &PotentialSpec, grid: &Grid) -> Result<Potential, ModelError> {
    let p_v = potential_exponent(grid.dim(), spec.beta)?;
    let v1 = spec.v1.sample(grid)?;
    let v2 = spec.v2.sample(grid)?;
    if v1.iter().chain(&v2).any(|v| !v.is_finite()) {
        return Err(ModelError::NonFiniteInput);
    }
    Ok(Potential {
        grid: *grid,
        v1,
        v2,
        p_v,
    })
}

impl Potential {
    pub fn p_v(&self) -> f64 {
        self.p_v
    }

    pub fn v1(&self) -> &[f64] {
        &self.v1
    }

    pub fn v2(&self) -> &[f64] {
        &self.v2
    }

    pub fn total(&self) -> Vec<f64> {
        self.v1.iter().zip(&self.v2).map(|(a, b)| a + b).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.v1.iter().chain(&self.v2).all(|v| *v == 0.0)
    }

    /// True when `V` is spatially constant, so that `grad V = 0`.
    pub fn is_constant(&self) -> bool {
        let total = self.total();
        total.iter().all(|v| *v == total[0])
    }

    fn as_field(&self, v: &[f64]) -> Vec<Complex64> {
        v.iter().map(|x| Complex64::new(*x, 0.0)).collect()
    }

    fn lp_norm(&self, v: &[f64], p: f64) -> f64 {
        (v.iter().map(|x| x.abs().powf(p)).sum::<f64>() * self.grid.cell_volume()).powf(1.0 / p)
    }

    /// `||V1||_inf + ||V2||_{L^{p_V}}`, an upper bound for the norm of `V`
    /// in `L^inf + L^{p_V}`.
    pub fn split_norm(&self) -> f64 {
        raw_norm(&self.grid, &self.as_field(&self.v1), NormKind::Linf)
            + self.lp_norm(&self.v2, self.p_v)
    }

    /// `||grad V1||_inf + ||grad V2||_{L^{p_V}}` from forward differences.
    pub fn gradient_split_norm(&self) -> f64 {
        let g1 = self.gradient_magnitude(&self.v1);
        let g2 = self.gradient_magnitude(&self.v2);
        g1.iter().fold(0.0, |m, x| f64::max(m, *x)) + self.lp_norm(&g2, self.p_v)
    }

    fn gradient_magnitude(&self, v: &[f64]) -> Vec<f64> {
        let grid = &self.grid;
        let m = grid.points_per_dim();
        let h = grid.spacing();
        let mut sq = vec![0.0; v.len()];
        for axis in 0..grid.dim() {
            let s = grid.stride(axis);
            for (i, out) in sq.iter_mut().enumerate() {
                let c = (i / s) % m;
                if c + 1 < m {
                    *out += ((v[i + s] - v[i]) / h).powi(2);
                }
            }
        }
        sq.into_iter().map(f64::sqrt).collect()
    }
}

/// `||V u||_2 / ((||V1||_inf + ||V2||_{p_V}) * ||u||_{H^1_0})`.
///
/// Bounded over `u` whenever `V` lies in `L^inf + L^{p_V}`; the caller
/// samples it to check that boundedness.
pub fn potential_l2_bound_ratio(potential: &Potential, u: &ComplexField) -> Result<f64, ModelError> {
    if *u.grid() != potential.grid {
        return Err(ModelError::GridMismatch);
    }
    if !u.is_finite() {
        return Err(ModelError::NonFiniteInput);
    }
    if u.is_zero() {
        return Err(ModelError::ZeroField);
    }
    let grid = u.grid();
    let vu: Vec<Complex64> = u
        .values()
        .iter()
        .zip(potential.total())
        .map(|(z, v)| z * v)
        .collect();
    let num = raw_norm(grid, &vu, NormKind::L2);
    let h1 = (raw_norm(grid, u.values(), NormKind::L2).powi(2)
        + raw_norm(grid, u.values(), NormKind::H1Semi).powi(2))
    .sqrt();
    let den = potential.split_norm() * h1;
    if den == 0.0 {
        if num == 0.0 {
            return Ok(0.0);
        }
        return Err(ModelError::DegenerateInput(
            "non-zero V u with vanishing potential norm".into(),
        ));
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FieldSpec;

    #[test]
    fn exponent_rule() {
        assert_eq!(potential_exponent(1, None).unwrap(), 2.0);
        assert_eq!(potential_exponent(2, Some(1.0)).unwrap(), 3.0);
        assert!(matches!(
            potential_exponent(2, Some(0.0)),
            Err(ModelError::InvalidExponent(_))
        ));
        assert!(matches!(
            potential_exponent(2, Some(-1.0)),
            Err(ModelError::InvalidExponent(_))
        ));
        assert_eq!(potential_exponent(3, None).unwrap(), 3.0);
    }

    #[test]
    fn complex_samples_rejected() {
        let grid = Grid::new(1, 1.0, 8).unwrap();
        let mut values = vec![Complex64::new(1.0, 0.0); 8];
        values[5].im = 1e-3;
        let spec = PotentialSpec {
            v1: PotentialTerm::Samples { values },
            v2: PotentialTerm::Zero,
            beta: None,
        };
        assert_eq!(
            validate_potential(&spec, &grid),
            Err(ModelError::ComplexPotential)
        );
    }

    #[test]
    fn beta_checked_through_validation() {
        let grid = Grid::new(2, 1.0, 8).unwrap();
        let spec = PotentialSpec {
            beta: Some(0.0),
            ..PotentialSpec::zero()
        };
        assert!(matches!(
            validate_potential(&spec, &grid),
            Err(ModelError::InvalidExponent(_))
        ));
    }

    #[test]
    fn ratio_examples() {
        let grid = Grid::new(1, 4.0, 200).unwrap();
        let u = FieldSpec::gaussian(1.0, vec![0.3], 0.8).sample(&grid).unwrap();
        let zero = validate_potential(&PotentialSpec::zero(), &grid).unwrap();
        assert_eq!(potential_l2_bound_ratio(&zero, &u).unwrap(), 0.0);

        let constant = validate_potential(
            &PotentialSpec {
                v1: PotentialTerm::Constant { value: 3.0 },
                ..PotentialSpec::zero()
            },
            &grid,
        )
        .unwrap();
        let r = potential_l2_bound_ratio(&constant, &u).unwrap();
        let l2 = raw_norm(&grid, u.values(), NormKind::L2);
        let h1 = (l2 * l2 + raw_norm(&grid, u.values(), NormKind::H1Semi).powi(2)).sqrt();
        assert!((r - l2 / h1).abs() < 1e-14);
        assert!(r <= 1.0);

        assert_eq!(
            potential_l2_bound_ratio(&constant, &ComplexField::zeros(grid)),
            Err(ModelError::ZeroField)
        );
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let grid = Grid::new(2, 1.0, 10).unwrap();
        let p = validate_potential(
            &PotentialSpec {
                v1: PotentialTerm::Constant { value: -2.0 },
                ..PotentialSpec::zero()
            },
            &grid,
        )
        .unwrap();
        assert!(p.is_constant());
        assert_eq!(p.gradient_split_norm(), 0.0);
    }
}
