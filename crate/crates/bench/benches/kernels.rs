use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use satnls_bench::free_bump;
use satnls_core::integrators::{damping_substep, linear_half_step};
use satnls_core::rnp::{mollify, yn_norm};
use satnls_core::{Complex64, ComplexField, Grid};

fn linear_solves(c: &mut Criterion) {
    for (dim, points) in [(1, 512), (2, 128)] {
        let (model, u0) = free_bump(Grid::new(dim, 8.0, points).unwrap());
        c.bench_function(&format!("linear_half_step/{dim}d/{points}"), |b| {
            b.iter(|| linear_half_step(black_box(&u0), &model.hamiltonian, 5e-4, 1e-12).unwrap())
        });
    }
}

fn damping(c: &mut Criterion) {
    let zs: Vec<Complex64> = (0..1024)
        .map(|k| Complex64::from_polar(1e-3 * (k % 37) as f64, k as f64))
        .collect();
    let f = Complex64::new(0.3, -0.2);
    c.bench_function("damping_substep/1024", |b| {
        b.iter(|| {
            zs.iter()
                .map(|z| damping_substep(*z, f, 1.0, 1e-3).norm())
                .sum::<f64>()
        })
    });
}

fn rnp(c: &mut Criterion) {
    let grid = Grid::new(1, 8.0, 1599).unwrap();
    let f = ComplexField::from_fn(grid, |x| {
        Complex64::new(if x[0].abs() <= 0.5 { 1.0 } else { 0.0 }, 0.0)
    });
    c.bench_function("yn_norm/n=5/1599", |b| b.iter(|| yn_norm(black_box(&f), 5).unwrap()));
    c.bench_function("mollify/ell=16/1599", |b| b.iter(|| mollify(black_box(&f), 16, 4).unwrap()));
}

criterion_group!(benches, linear_solves, damping, rnp);
criterion_main!(benches);
