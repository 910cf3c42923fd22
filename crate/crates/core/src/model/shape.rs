use std::f64::consts::PI;
use std::path::PathBuf;

use num_complex::Complex64;

use super::ModelError;
use crate::grid::{raw_norm, ComplexField, Grid, NormKind};
use crate::io::load_field_csv;

/// Closed-form or file-backed description of a complex field.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldShape {
    Zero,
    /// `amplitude * prod_d cos(pi (x_d - c_d) / (2 w))` on the cube
    /// `|x_d - c_d| < w`, zero outside: one positive half-period of a sine
    /// per axis.
    SinBump {
        amplitude: f64,
        center: Vec<f64>,
        width: f64,
    },
    /// `amplitude * exp(-|x - c|^2 / (2 w^2))`.
    Gaussian {
        amplitude: f64,
        center: Vec<f64>,
        width: f64,
    },
    /// Field snapshot CSV.
    File { path: PathBuf },
}

/// A field shape with an optional rescaling to a prescribed `L^2` norm and
/// a constant phase factor `exp(i phase)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSpec {
    pub shape: FieldShape,
    pub l2_norm: Option<f64>,
    pub phase: f64,
}

impl FieldSpec {
    pub fn zero() -> Self {
        Self::new(FieldShape::Zero)
    }

    pub fn new(shape: FieldShape) -> Self {
        Self {
            shape,
            l2_norm: None,
            phase: 0.0,
        }
    }

    pub fn sin_bump(amplitude: f64, center: f64, width: f64) -> Self {
        Self::new(FieldShape::SinBump {
            amplitude,
            center: vec![center],
            width,
        })
    }

    pub fn gaussian(amplitude: f64, center: Vec<f64>, width: f64) -> Self {
        Self::new(FieldShape::Gaussian {
            amplitude,
            center,
            width,
        })
    }

    pub fn with_l2_norm(mut self, norm: f64) -> Self {
        self.l2_norm = Some(norm);
        self
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.shape, FieldShape::Zero)
    }

    pub fn sample(&self, grid: &Grid) -> Result<ComplexField, ModelError> {
        let center_at = |c: &[f64], d: usize| c.get(d).copied().unwrap_or(0.0);
        let mut field = match &self.shape {
            FieldShape::Zero => ComplexField::zeros(*grid),
            FieldShape::SinBump {
                amplitude,
                center,
                width,
            } => {
                positive("width", *width)?;
                ComplexField::from_fn(*grid, |x| {
                    let mut v = *amplitude;
                    for (d, xd) in x.iter().enumerate() {
                        let s = xd - center_at(center, d);
                        v *= if s.abs() < *width {
                            (PI * s / (2.0 * width)).cos()
                        } else {
                            0.0
                        };
                    }
                    Complex64::new(v, 0.0)
                })
            }
            FieldShape::Gaussian {
                amplitude,
                center,
                width,
            } => {
                positive("width", *width)?;
                ComplexField::from_fn(*grid, |x| {
                    let r2: f64 = x
                        .iter()
                        .enumerate()
                        .map(|(d, xd)| (xd - center_at(center, d)).powi(2))
                        .sum();
                    Complex64::new(amplitude * (-r2 / (2.0 * width * width)).exp(), 0.0)
                })
            }
            FieldShape::File { path } => {
                load_field_csv(path, *grid).map_err(|e| ModelError::Load {
                    path: path.display().to_string(),
                    reason: e.to_string(),
                })?
            }
        };
        if !field.is_finite() {
            return Err(ModelError::NonFiniteInput);
        }
        let mut factor = Complex64::from_polar(1.0, self.phase);
        if let Some(target) = self.l2_norm {
            if !(target.is_finite() && target >= 0.0) {
                return Err(ModelError::InvalidParameter(format!(
                    "l2_norm must be non-negative (got {target})"
                )));
            }
            let current = raw_norm(grid, field.values(), NormKind::L2);
            if current == 0.0 {
                if target > 0.0 {
                    return Err(ModelError::ZeroField);
                }
            } else {
                factor *= target / current;
            }
        }
        if factor != Complex64::new(1.0, 0.0) {
            field.values_mut().iter_mut().for_each(|z| *z *= factor);
        }
        Ok(field)
    }
}

pub(super) fn positive(name: &str, v: f64) -> Result<(), ModelError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter(format!(
            "{name} must be positive (got {v})"
        )))
    }
}
