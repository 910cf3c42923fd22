use std::str::FromStr;

use num_complex::Complex64;

use super::shape::FieldSpec;
use super::ModelError;
use crate::grid::{raw_norm, ComplexField, Grid, NormKind};

/// Time profile `a(t)` of a separable forcing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Amplitude {
    Constant { re: f64, im: f64 },
    /// `a0 * exp(-rate t)`.
    ExpDecay { a0: f64, rate: f64 },
    /// `a0 * exp(i omega t)`.
    Oscillating { a0: f64, omega: f64 },
}

impl Amplitude {
    pub fn at(&self, t: f64) -> Complex64 {
        match *self {
            Amplitude::Constant { re, im } => Complex64::new(re, im),
            Amplitude::ExpDecay { a0, rate } => Complex64::new(a0 * (-rate * t).exp(), 0.0),
            Amplitude::Oscillating { a0, omega } => Complex64::from_polar(a0, omega * t),
        }
    }

    /// Upper bound for `|a(t)|` over `t >= from`.
    fn sup_from(&self, from: f64) -> f64 {
        match *self {
            Amplitude::Constant { re, im } => Complex64::new(re, im).norm(),
            Amplitude::ExpDecay { a0, rate } => {
                if rate >= 0.0 {
                    (a0 * (-rate * from).exp()).abs()
                } else {
                    f64::INFINITY
                }
            }
            Amplitude::Oscillating { a0, .. } => a0.abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ForcingKind {
    Zero,
    /// `f(t, x) = a(t) phi(x)`.
    Separable,
    /// `a(t) phi(x)`, with the pointwise modulus clipped to `cap < mu` from
    /// the switch time `t0` on.
    BangBangCapped { cap: f64 },
    /// `eps_star (t0 - t)_+ phi(x) / ||phi||_2`.
    RampToZero,
}

impl ForcingKind {
    pub fn name(&self) -> &'static str {
        match self {
            ForcingKind::Zero => "zero",
            ForcingKind::Separable => "separable",
            ForcingKind::BangBangCapped { .. } => "bangbang_capped",
            ForcingKind::RampToZero => "ramp_to_zero",
        }
    }
}

impl FromStr for ForcingKind {
    type Err = ModelError;

    /// Parses a kind name; the cap of `bangbang_capped` starts at zero and
    /// is filled in by the caller.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zero" => Ok(ForcingKind::Zero),
            "separable" => Ok(ForcingKind::Separable),
            "bangbang_capped" => Ok(ForcingKind::BangBangCapped { cap: 0.0 }),
            "ramp_to_zero" => Ok(ForcingKind::RampToZero),
            other => Err(ModelError::UnknownKind(other.to_string())),
        }
    }
}

/// Grid-independent forcing description.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingSpec {
    pub kind: ForcingKind,
    pub amp: Amplitude,
    pub profile: FieldSpec,
    pub t0: f64,
    pub eps_star: f64,
}

impl ForcingSpec {
    pub fn zero() -> Self {
        Self {
            kind: ForcingKind::Zero,
            amp: Amplitude::Constant { re: 0.0, im: 0.0 },
            profile: FieldSpec::zero(),
            t0: 0.0,
            eps_star: 0.0,
        }
    }

    pub fn separable(amp: Amplitude, profile: FieldSpec) -> Self {
        Self {
            kind: ForcingKind::Separable,
            amp,
            profile,
            t0: 0.0,
            eps_star: 0.0,
        }
    }

    pub fn bangbang_capped(amp: Amplitude, profile: FieldSpec, t0: f64, cap: f64) -> Self {
        Self {
            kind: ForcingKind::BangBangCapped { cap },
            amp,
            profile,
            t0,
            eps_star: 0.0,
        }
    }

    pub fn ramp_to_zero(profile: FieldSpec, t0: f64, eps_star: f64) -> Self {
        Self {
            kind: ForcingKind::RampToZero,
            amp: Amplitude::Constant { re: 1.0, im: 0.0 },
            profile,
            t0,
            eps_star,
        }
    }

    pub fn build(&self, grid: &Grid, mu: f64) -> Result<Forcing, ModelError> {
        if !(self.t0.is_finite() && self.t0 >= 0.0) {
            return Err(ModelError::InvalidParameter(format!(
                "forcing t0 must be non-negative (got {})",
                self.t0
            )));
        }
        if !(self.eps_star.is_finite() && self.eps_star >= 0.0) {
            return Err(ModelError::InvalidParameter(format!(
                "eps_star must be non-negative (got {})",
                self.eps_star
            )));
        }
        let mut profile = match self.kind {
            ForcingKind::Zero => ComplexField::zeros(*grid),
            _ => self.profile.sample(grid)?,
        };
        match self.kind {
            ForcingKind::RampToZero => {
                let n = raw_norm(grid, profile.values(), NormKind::L2);
                if n == 0.0 {
                    return Err(ModelError::ZeroField);
                }
                profile.values_mut().iter_mut().for_each(|z| *z /= n);
            }
            ForcingKind::BangBangCapped { cap } if !(cap.is_finite() && cap >= 0.0 && cap < mu) => {
                return Err(ModelError::InvalidParameter(format!(
                    "bang-bang cap must satisfy 0 <= cap < mu = {mu} (got {cap})"
                )));
            }
            _ => {}
        }
        Ok(Forcing {
            kind: self.kind,
            amp: self.amp,
            profile,
            t0: self.t0,
            eps_star: self.eps_star,
        })
    }
}

/// Forcing sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Forcing {
    kind: ForcingKind,
    amp: Amplitude,
    profile: ComplexField,
    t0: f64,
    eps_star: f64,
}

impl Forcing {
    pub fn zero(grid: Grid) -> Self {
        Self {
            kind: ForcingKind::Zero,
            amp: Amplitude::Constant { re: 0.0, im: 0.0 },
            profile: ComplexField::zeros(grid),
            t0: 0.0,
            eps_star: 0.0,
        }
    }

    pub fn kind(&self) -> ForcingKind {
        self.kind
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn profile(&self) -> &ComplexField {
        &self.profile
    }

    /// True when `f` vanishes for all times.
    pub fn is_identically_zero(&self) -> bool {
        match self.kind {
            ForcingKind::Zero => true,
            ForcingKind::RampToZero => self.eps_star == 0.0 || self.t0 == 0.0,
            _ => self.profile.is_zero() || self.amp.sup_from(0.0) == 0.0,
        }
    }

    /// Upper bound for the pointwise modulus `|f(t, x)|` over `t >= from`.
    pub fn sup_modulus_from(&self, from: f64) -> f64 {
        let phi = raw_norm(self.profile.grid(), self.profile.values(), NormKind::Linf);
        match self.kind {
            ForcingKind::Zero => 0.0,
            ForcingKind::Separable => self.amp.sup_from(from) * phi,
            ForcingKind::BangBangCapped { cap } => {
                let raw = self.amp.sup_from(from) * phi;
                if from >= self.t0 {
                    raw.min(cap)
                } else {
                    raw
                }
            }
            ForcingKind::RampToZero => self.eps_star * (self.t0 - from).max(0.0) * phi,
        }
    }

    /// Writes `f(t, .)` into `out`.
    pub fn eval_into(&self, t: f64, out: &mut [Complex64]) {
        let phi = self.profile.values();
        match self.kind {
            ForcingKind::Zero => out.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0)),
            ForcingKind::Separable => {
                let a = self.amp.at(t);
                out.iter_mut().zip(phi).for_each(|(o, p)| *o = a * p);
            }
            ForcingKind::BangBangCapped { cap } => {
                let a = self.amp.at(t);
                let capped = t >= self.t0;
                out.iter_mut().zip(phi).for_each(|(o, p)| {
                    let v = a * p;
                    let m = v.norm();
                    *o = if capped && m > cap { v * (cap / m) } else { v };
                });
            }
            ForcingKind::RampToZero => {
                let a = self.eps_star * (self.t0 - t).max(0.0);
                out.iter_mut().zip(phi).for_each(|(o, p)| *o = a * p);
            }
        }
    }

    pub fn eval(&self, t: f64) -> ComplexField {
        let mut f = ComplexField::zeros(*self.profile.grid());
        self.eval_into(t, f.values_mut());
        f
    }
}

/// Samples `f(t, .)`.
pub fn eval_forcing(forcing: &Forcing, t: f64) -> Result<ComplexField, ModelError> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(ModelError::InvalidParameter(format!(
            "forcing time must be non-negative (got {t})"
        )));
    }
    Ok(forcing.eval(t))
}
