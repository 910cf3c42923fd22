//! The discrete Hamiltonian `H = Δ_h + V` and solvers for the shifted
//! systems `(D - i a H) x = b` that every implicit step reduces to.
//!
//! `D` is a real, positive diagonal (a scalar for Crank–Nicolson, a lagged
//! damping coefficient for the implicit scheme). Since `H` is real symmetric
//! the system matrix is complex symmetric with a positive definite Hermitian
//! part: one-dimensional problems are solved directly by the Thomas
//! algorithm, higher dimensions by Jacobi-preconditioned conjugate
//! orthogonal CG (COCG).

use num_complex::Complex64;
use thiserror::Error;

use crate::grid::{laplacian_into, Grid};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinearSolveError {
    #[error("linear solve did not converge: residual {residual:e} after {iterations} iterations")]
    Diverged { iterations: usize, residual: f64 },
    #[error("linear solve broke down at iteration {0}")]
    Breakdown(usize),
}

/// Diagonal part `D` of a shifted system.
#[derive(Debug, Clone, Copy)]
pub enum Shift<'a> {
    Scalar(f64),
    Diagonal(&'a [f64]),
}

impl Shift<'_> {
    #[inline]
    fn at(&self, i: usize) -> f64 {
        match self {
            Shift::Scalar(s) => *s,
            Shift::Diagonal(d) => d[i],
        }
    }
}

/// `H = Δ_h + V` on a grid, with real potential samples.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    grid: Grid,
    potential: Vec<f64>,
    kinetic: bool,
    max_iter: usize,
}

impl Hamiltonian {
    pub fn new(grid: Grid, potential: Vec<f64>) -> Self {
        assert_eq!(potential.len(), grid.len(), "potential shape");
        Self {
            grid,
            potential,
            kinetic: true,
            max_iter: 20 * grid.len().max(50),
        }
    }

    pub fn free(grid: Grid) -> Self {
        Self::new(grid, vec![0.0; grid.len()])
    }

    /// Drops the Laplacian, leaving the pointwise operator `V` only. Used to
    /// reduce the PDE to independent scalar ODEs.
    pub fn without_kinetic(mut self) -> Self {
        self.kinetic = false;
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn has_kinetic(&self) -> bool {
        self.kinetic
    }

    /// `out = H u`.
    pub fn apply(&self, u: &[Complex64], out: &mut [Complex64]) {
        if self.kinetic {
            laplacian_into(&self.grid, u, out);
        } else {
            out.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        }
        for ((o, z), v) in out.iter_mut().zip(u).zip(&self.potential) {
            *o += z * v;
        }
    }

    /// `out = (D - i a H) u`.
    pub fn apply_shifted(&self, shift: Shift<'_>, a: f64, u: &[Complex64], out: &mut [Complex64]) {
        self.apply(u, out);
        let ia = Complex64::new(0.0, a);
        for (i, (o, z)) in out.iter_mut().zip(u).enumerate() {
            *o = z * shift.at(i) - ia * *o;
        }
    }

    /// Solves `(D - i a H) x = rhs`. `x` holds the initial guess on entry
    /// (ignored by the direct paths). Returns the iteration count.
    pub fn solve_shifted(
        &self,
        shift: Shift<'_>,
        a: f64,
        rhs: &[Complex64],
        tol: f64,
        x: &mut [Complex64],
    ) -> Result<usize, LinearSolveError> {
        if !self.kinetic {
            for (i, (xi, b)) in x.iter_mut().zip(rhs).enumerate() {
                *xi = b / Complex64::new(shift.at(i), -a * self.potential[i]);
            }
            return Ok(0);
        }
        if self.grid.dim() == 1 {
            self.thomas(shift, a, rhs, x);
            return Ok(0);
        }
        self.cocg(shift, a, rhs, tol, x)
    }

    fn diagonal(&self, shift: Shift<'_>, a: f64, i: usize) -> Complex64 {
        let h2 = self.grid.spacing().powi(2);
        let stencil = if self.kinetic {
            -2.0 * self.grid.dim() as f64 / h2
        } else {
            0.0
        };
        Complex64::new(shift.at(i), -a * (stencil + self.potential[i]))
    }

    fn thomas(&self, shift: Shift<'_>, a: f64, rhs: &[Complex64], x: &mut [Complex64]) {
        let n = rhs.len();
        let off = Complex64::new(0.0, -a / self.grid.spacing().powi(2));
        // Forward sweep stores the modified super-diagonal in `c` and the
        // modified right-hand side in `x`.
        let mut c = vec![Complex64::new(0.0, 0.0); n];
        let mut denom = self.diagonal(shift, a, 0);
        c[0] = off / denom;
        x[0] = rhs[0] / denom;
        for i in 1..n {
            denom = self.diagonal(shift, a, i) - off * c[i - 1];
            c[i] = off / denom;
            x[i] = (rhs[i] - off * x[i - 1]) / denom;
        }
        for i in (0..n - 1).rev() {
            let next = x[i + 1];
            x[i] -= c[i] * next;
        }
    }

    fn cocg(
        &self,
        shift: Shift<'_>,
        a: f64,
        rhs: &[Complex64],
        tol: f64,
        x: &mut [Complex64],
    ) -> Result<usize, LinearSolveError> {
        let n = rhs.len();
        let b_norm = rhs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if b_norm == 0.0 {
            x.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            return Ok(0);
        }
        let inv_diag: Vec<Complex64> = (0..n)
            .map(|i| self.diagonal(shift, a, i).inv())
            .collect();
        let bilinear = |p: &[Complex64], q: &[Complex64]| -> Complex64 {
            p.iter().zip(q).map(|(a, b)| a * b).sum()
        };

        let mut r = vec![Complex64::new(0.0, 0.0); n];
        self.apply_shifted(shift, a, x, &mut r);
        for (ri, b) in r.iter_mut().zip(rhs) {
            *ri = b - *ri;
        }
        let mut z: Vec<Complex64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
        let mut p = z.clone();
        let mut q = vec![Complex64::new(0.0, 0.0); n];
        let mut rho = bilinear(&r, &z);
        let mut res = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if res <= tol * b_norm {
            return Ok(0);
        }
        for it in 1..=self.max_iter {
            self.apply_shifted(shift, a, &p, &mut q);
            let pq = bilinear(&p, &q);
            if pq.norm() == 0.0 || rho.norm() == 0.0 {
                return Err(LinearSolveError::Breakdown(it));
            }
            let alpha = rho / pq;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * q[i];
            }
            res = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if res <= tol * b_norm {
                return Ok(it);
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rho_next = bilinear(&r, &z);
            let beta = rho_next / rho;
            rho = rho_next;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(LinearSolveError::Diverged {
            iterations: self.max_iter,
            residual: res / b_norm,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(n: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    }

    fn residual(h: &Hamiltonian, shift: Shift<'_>, a: f64, x: &[Complex64], b: &[Complex64]) -> f64 {
        let mut ax = vec![Complex64::new(0.0, 0.0); x.len()];
        h.apply_shifted(shift, a, x, &mut ax);
        let num: f64 = ax.iter().zip(b).map(|(p, q)| (p - q).norm_sqr()).sum();
        let den: f64 = b.iter().map(|q| q.norm_sqr()).sum();
        (num / den).sqrt()
    }

    #[test]
    fn thomas_solves_1d() {
        let grid = Grid::new(1, 3.0, 200).unwrap();
        let v: Vec<f64> = (0..grid.len()).map(|i| (i as f64 * 0.1).sin()).collect();
        let h = Hamiltonian::new(grid, v);
        let b = random_vec(grid.len(), 1);
        let mut x = vec![Complex64::new(0.0, 0.0); grid.len()];
        h.solve_shifted(Shift::Scalar(1.0), 0.05, &b, 1e-12, &mut x).unwrap();
        assert!(residual(&h, Shift::Scalar(1.0), 0.05, &x, &b) < 1e-13);
    }

    #[test]
    fn cocg_solves_2d_and_3d() {
        for (dim, m) in [(2, 24), (3, 10)] {
            let grid = Grid::new(dim, 2.0, m).unwrap();
            let v: Vec<f64> = (0..grid.len()).map(|i| 0.5 * (i as f64).cos()).collect();
            let diag: Vec<f64> = (0..grid.len()).map(|i| 1.0 + (i % 7) as f64).collect();
            let h = Hamiltonian::new(grid, v);
            let b = random_vec(grid.len(), 2);
            let mut x = vec![Complex64::new(0.0, 0.0); grid.len()];
            h.solve_shifted(Shift::Diagonal(&diag), 0.01, &b, 1e-12, &mut x)
                .unwrap();
            assert!(residual(&h, Shift::Diagonal(&diag), 0.01, &x, &b) < 1e-11);
        }
    }

    #[test]
    fn pointwise_solve_without_kinetic() {
        let grid = Grid::new(2, 1.0, 8).unwrap();
        let h = Hamiltonian::new(grid, vec![2.0; grid.len()]).without_kinetic();
        let b = random_vec(grid.len(), 3);
        let mut x = vec![Complex64::new(0.0, 0.0); grid.len()];
        h.solve_shifted(Shift::Scalar(1.5), 0.3, &b, 1e-12, &mut x).unwrap();
        assert!(residual(&h, Shift::Scalar(1.5), 0.3, &x, &b) < 1e-14);
    }

    #[test]
    fn hamiltonian_is_symmetric() {
        let grid = Grid::new(2, 1.0, 9).unwrap();
        let v: Vec<f64> = (0..grid.len()).map(|i| (i % 5) as f64).collect();
        let h = Hamiltonian::new(grid, v);
        let u = random_vec(grid.len(), 4);
        let w = random_vec(grid.len(), 5);
        let mut hu = vec![Complex64::new(0.0, 0.0); grid.len()];
        let mut hw = hu.clone();
        h.apply(&u, &mut hu);
        h.apply(&w, &mut hw);
        let lhs: Complex64 = hu.iter().zip(&w).map(|(a, b)| a * b).sum();
        let rhs: Complex64 = u.iter().zip(&hw).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).norm() < 1e-9 * lhs.norm().max(1.0));
    }
}
