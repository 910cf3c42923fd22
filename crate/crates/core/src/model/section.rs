use num_complex::Complex64;

use super::ModelError;
use crate::grid::ComplexField;

/// Tolerance on `|U| <= 1` accepted by [`monotonicity_pairing`].
pub const SECTION_MODULUS_SLACK: f64 = 1e-12;

/// Regularized saturation `u / (|u|^2 + eps)^{1/2}`, pointwise. At `eps = 0`
/// zeros of `u` map to zero.
pub fn g_eps(u: &ComplexField, eps: f64) -> Result<ComplexField, ModelError> {
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(ModelError::InvalidParameter(format!(
            "eps must be non-negative (got {eps})"
        )));
    }
    if !u.is_finite() {
        return Err(ModelError::NonFiniteInput);
    }
    let mut out = u.clone();
    out.values_mut()
        .iter_mut()
        .for_each(|z| *z = g_eps_point(*z, eps));
    Ok(out)
}

#[inline]
pub(crate) fn g_eps_point(z: Complex64, eps: f64) -> Complex64 {
    let m2 = z.norm_sqr();
    if m2 == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    if eps == 0.0 {
        // u / |u| without squaring, for subnormal-safe moduli.
        return z / z.norm();
    }
    z / (m2 + eps).sqrt()
}

/// Bounded selection `U` of the multivalued map `u / |u|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SaturatedSection {
    pub values: ComplexField,
    /// Nodes where `|u| <= zero_tol` and the zero-set rule was used.
    pub zero_mask: Vec<bool>,
}

/// One node of [`saturated_section`]: returns `(U, on_zero_set)`.
///
/// Away from zero `U = u/|u|`. On the zero set the stationary balance
/// `i mu U = f` is used when it is solvable (`|f| <= mu`); otherwise `U` is
/// the unit vector `f / (i |f|)`.
#[inline]
pub fn section_value(u: Complex64, f: Complex64, mu: f64, zero_tol: f64) -> (Complex64, bool) {
    let r = u.norm();
    if r > zero_tol {
        return (u / r, false);
    }
    let fm = f.norm();
    if fm == 0.0 {
        return (Complex64::new(0.0, 0.0), true);
    }
    let i = Complex64::new(0.0, 1.0);
    if fm <= mu {
        (f / (i * mu), true)
    } else {
        (f / (i * fm), true)
    }
}

pub fn saturated_section(
    u: &ComplexField,
    f: &ComplexField,
    mu: f64,
    zero_tol: f64,
) -> Result<SaturatedSection, ModelError> {
    u.check_same_grid(f).map_err(|_| ModelError::GridMismatch)?;
    if !(zero_tol > 0.0) {
        return Err(ModelError::InvalidParameter(format!(
            "zero_tol must be positive (got {zero_tol})"
        )));
    }
    let mut values = ComplexField::zeros(*u.grid());
    let mut zero_mask = vec![false; u.values().len()];
    for (k, (z, fz)) in u.values().iter().zip(f.values()).enumerate() {
        let (s, masked) = section_value(*z, *fz, mu, zero_tol);
        values.values_mut()[k] = s;
        zero_mask[k] = masked;
    }
    Ok(SaturatedSection { values, zero_mask })
}

/// `Re sum (U1 - U2) conj(u1 - u2) h^N`; non-negative for valid sections.
pub fn monotonicity_pairing(
    u1: &ComplexField,
    s1: &ComplexField,
    u2: &ComplexField,
    s2: &ComplexField,
) -> Result<f64, ModelError> {
    let grid = u1.grid();
    if [s1, u2, s2].iter().any(|f| f.grid() != grid) {
        return Err(ModelError::GridMismatch);
    }
    let max_modulus = s1
        .values()
        .iter()
        .chain(s2.values())
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if max_modulus > 1.0 + SECTION_MODULUS_SLACK {
        return Err(ModelError::InvalidSection { max_modulus });
    }
    let sum: f64 = u1
        .values()
        .iter()
        .zip(s1.values())
        .zip(u2.values().iter().zip(s2.values()))
        .map(|((a, sa), (b, sb))| ((sa - sb) * (a - b).conj()).re)
        .sum();
    Ok(sum * grid.cell_volume())
}
