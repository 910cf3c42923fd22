use num_complex::Complex64;

/// Local error control of the adaptive RK4 sub-flow.
const RK_ATOL: f64 = 1e-14;
const RK_RTOL: f64 = 1e-11;
/// Smallest step as a fraction of the requested interval.
const RK_MIN_FRACTION: f64 = 1e-12;

/// Pointwise saturated damping `z' = -mu z/|z| - i f` with `f` frozen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaturatedDamping {
    pub mu: f64,
    /// Moduli at or below this are treated as exact zeros.
    pub zero_tol: f64,
}

impl SaturatedDamping {
    pub fn new(mu: f64, zero_tol: f64) -> Self {
        Self { mu, zero_tol }
    }

    /// Advances `z` by `dt`.
    ///
    /// With `f = 0` the modulus decreases linearly and the solution is
    /// exact. Otherwise the flow is integrated by step-doubling RK4 on the
    /// right side regularized with `zero_tol^2`. Trajectories are clamped to
    /// zero as soon as the remaining time suffices to reach the origin
    /// against the forcing (`|f| < mu`); at the origin they either stay put
    /// (`|f| <= mu`) or leave along `-i f/|f|` at radial speed `|f| - mu`.
    pub fn advance(&self, z: Complex64, f: Complex64, dt: f64) -> Complex64 {
        let zero = Complex64::new(0.0, 0.0);
        let mu = self.mu;
        if !(dt > 0.0) {
            return z;
        }
        let fm = f.norm();
        if fm == 0.0 {
            let r = z.norm();
            if r <= mu * dt {
                return zero;
            }
            return z * (1.0 - mu * dt / r);
        }
        let drift = Complex64::new(0.0, -1.0) * f;
        if mu == 0.0 {
            return z + drift * dt;
        }
        let eps = (self.zero_tol * self.zero_tol).max(f64::MIN_POSITIVE);
        let rhs = |w: Complex64| drift - w * (mu / (w.norm_sqr() + eps).sqrt());
        let rk4 = |w: Complex64, h: f64| {
            let k1 = rhs(w);
            let k2 = rhs(w + k1 * (0.5 * h));
            let k3 = rhs(w + k2 * (0.5 * h));
            let k4 = rhs(w + k3 * h);
            w + (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (h / 6.0)
        };

        let h_min = dt * RK_MIN_FRACTION;
        let mut z = z;
        let mut t = 0.0;
        let mut h = dt;
        while t < dt {
            let rem = dt - t;
            let r = z.norm();
            if r <= self.zero_tol {
                return if fm <= mu {
                    zero
                } else {
                    drift * ((fm - mu) * rem / fm)
                };
            }
            if fm < mu && r <= (mu - fm) * rem {
                return zero;
            }
            h = h.min(rem);
            let full = rk4(z, h);
            let half = rk4(rk4(z, 0.5 * h), 0.5 * h);
            let err = (half - full).norm() / 15.0;
            let tol = RK_ATOL + RK_RTOL * r.max(half.norm());
            if err <= tol || h <= h_min {
                z = half;
                t = if h >= rem { dt } else { t + h };
                let grow = if err == 0.0 {
                    4.0
                } else {
                    (0.9 * (tol / err).powf(0.2)).clamp(0.2, 4.0)
                };
                h *= grow;
            } else {
                h = (h * (0.9 * (tol / err).powf(0.2)).clamp(0.1, 0.5)).max(h_min);
            }
        }
        z
    }
}

/// [`SaturatedDamping::advance`] with the default zero threshold `1e-14`.
pub fn damping_substep(z: Complex64, f: Complex64, mu: f64, dt: f64) -> Complex64 {
    SaturatedDamping::new(mu, super::DEFAULT_ZERO_TOL_FACTOR).advance(z, f, dt)
}
