//! Acceptance criteria A1-A14. Each test prints one `PASS`/`FAIL` line to
//! stderr (unaffected by output capture) and then asserts the outcome.

use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use satnls_core::diagnostics::{bound_curve, fit_decay_constant, mass_balance_residual};
use satnls_core::integrators::{cross_validate, linear_half_step, run, Scheme, SolverConfig};
use satnls_core::model::{
    g_eps, monotonicity_pairing, saturated_section, ForcingKind, ModelSpec,
};
use satnls_core::rnp::{arctan_counterexample_sep, mollify, yn_norm};
use satnls_core::scenarios::{catalog, find, h1_growth_check, GrowthBranch, ScenarioOutcome};
use satnls_core::{norm, ComplexField, Grid, NormKind};

struct Timed {
    outcome: ScenarioOutcome,
    elapsed: Duration,
}

/// Each catalog scenario is executed at most once per test binary.
fn scenario(name: &str) -> &'static Timed {
    static CELLS: OnceLock<Vec<(&'static str, OnceLock<Timed>)>> = OnceLock::new();
    let cells = CELLS.get_or_init(|| catalog().iter().map(|s| (s.name, OnceLock::new())).collect());
    let (_, cell) = cells
        .iter()
        .find(|(n, _)| *n == name)
        .unwrap_or_else(|| panic!("unknown scenario {name}"));
    cell.get_or_init(|| {
        let start = Instant::now();
        let outcome = find(name).unwrap().execute().unwrap();
        Timed {
            outcome,
            elapsed: start.elapsed(),
        }
    })
}

fn verdict(id: &str, title: &str, pass: bool, detail: String) {
    let status = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "[{id}] {status} {title}: {detail}");
    assert!(pass, "{id} {title} failed: {detail}");
}

fn within(elapsed: Duration, budget_s: f64) -> bool {
    elapsed.as_secs_f64() < budget_s
}

fn l2_values(grid: &Grid, v: &[Complex64]) -> f64 {
    (v.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.cell_volume()).sqrt()
}

#[test]
fn a01_unitary_control() {
    let s = find("conservation_control").unwrap();
    assert_eq!(s.model.mu, 0.0);
    assert_eq!(s.model.forcing.kind, ForcingKind::Zero);
    let mut config = SolverConfig::strang(1e-3, 10.0);
    config.boundary_fail_threshold = 1.0;
    assert_eq!(config.n_steps(), 10_000);
    assert_eq!(s.grid.points_per_dim(), 512);
    let model = s.model.build(&s.grid).unwrap();
    let u0 = s.u0.sample(&s.grid).unwrap();
    let start = Instant::now();
    let out = run(&model, &config, &u0).unwrap();
    let elapsed = start.elapsed();
    let n0 = norm(&u0, NormKind::L2).unwrap();
    let drift = out
        .series
        .mass_sq
        .iter()
        .map(|m| (m.sqrt() - n0).abs())
        .fold(0.0, f64::max)
        / n0;
    verdict(
        "A1",
        "unitary control",
        drift <= 1e-9 && within(elapsed, 10.0),
        format!("max |‖u‖-‖u0‖|/‖u0‖ = {drift:.3e} (≤ 1e-9), {:.2}s (< 10s)", elapsed.as_secs_f64()),
    );
}

#[test]
fn a02_eigenmode_phase() {
    let start = Instant::now();
    let (half_width, m, k) = (1.0, 127usize, 3usize);
    let grid = Grid::new(1, half_width, m).unwrap();
    let h = grid.spacing();
    let model = ModelSpec::free(0.0).build(&grid).unwrap();
    // sin(k pi (x + L) / (2L)) is an eigenvector of the Dirichlet
    // difference Laplacian with eigenvalue -4/h^2 sin^2(k pi h / (4L)).
    let theta = k as f64 * std::f64::consts::PI / (2.0 * half_width);
    let lambda = -4.0 / (h * h) * (theta * h / 2.0).sin().powi(2);
    let mut u = ComplexField::from_fn(grid, |x| Complex64::new((theta * (x[0] + half_width)).sin(), 0.0));
    let dt = 1e-3;
    let a = Complex64::new(0.0, dt / 2.0 * lambda);
    let phase = (Complex64::new(1.0, 0.0) + a) / (Complex64::new(1.0, 0.0) - a);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let next = linear_half_step(&u, &model.hamiltonian, dt, 1e-14).unwrap();
        for (p, q) in next.values().iter().zip(u.values()) {
            worst = worst.max((p - phase * q).norm());
        }
        u = next;
    }
    let elapsed = start.elapsed();
    verdict(
        "A2",
        "eigenmode Cayley phase",
        worst <= 1e-12 && within(elapsed, 1.0),
        format!("max pointwise error {worst:.3e} (≤ 1e-12), {:.3}s (< 1s)", elapsed.as_secs_f64()),
    );
}

fn residual_max_rel(series: &satnls_core::DiagSeries, mu: f64) -> f64 {
    let r = mass_balance_residual(series, mu).unwrap();
    r.iter().fold(0.0f64, |m, x| m.max(x.abs())) / series.mass_sq[0]
}

#[test]
fn a03_mass_identity() {
    let start = Instant::now();
    let s = find("extinction_1d").unwrap();
    assert_eq!(s.config.dt, 1e-4);
    let model = s.model.build(&s.grid).unwrap();
    let u0 = s.u0.sample(&s.grid).unwrap();
    let coarse = run(&model, &s.config, &u0).unwrap();
    let fine_cfg = SolverConfig::strang(s.config.dt / 2.0, s.config.t_end);
    let fine = run(&model, &fine_cfg, &u0).unwrap();
    let elapsed = start.elapsed();
    let r_coarse = residual_max_rel(&coarse.series, model.mu);
    let r_fine = residual_max_rel(&fine.series, model.mu);
    let ratio = r_coarse / r_fine;
    verdict(
        "A3",
        "mass identity",
        r_coarse <= 1e-4 && ratio >= 2.0 && within(elapsed, 60.0),
        format!(
            "residual/‖u0‖² = {r_coarse:.3e} (≤ 1e-4), halving ratio {ratio:.4} (≥ 2), {:.1}s (< 60s)",
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn a04_finite_time_extinction() {
    let t = scenario("extinction_1d");
    let strang = &t.outcome.runs[0];
    let implicit = &t.outcome.reference.as_ref().unwrap().run;
    assert_eq!(strang.scheme, Scheme::Strang);
    assert_eq!(implicit.scheme, Scheme::BackwardEulerReg);
    let ta = strang.extinction_time().unwrap();
    let tb = implicit.extinction_time().unwrap();
    let (pass, detail) = match (ta, tb) {
        (Some(a), Some(b)) => {
            let rel = (a - b).abs() / a.max(b);
            let s = &strang.output.series;
            let post: f64 = s
                .times
                .iter()
                .zip(&s.mass_sq)
                .filter(|(ti, _)| **ti >= a)
                .map(|(_, m)| *m)
                .fold(0.0, f64::max);
            let samples = s.times.iter().filter(|ti| **ti >= a).count();
            (
                rel <= 0.05 && post == 0.0 && samples > 1 && within(t.elapsed, 60.0),
                format!(
                    "T* = {a} (splitting), {b} (implicit), rel diff {rel:.3e} (≤ 0.05); \
                     post-extinction max mass {post} over {samples} samples; {:.1}s (< 60s)",
                    t.elapsed.as_secs_f64()
                ),
            )
        }
        _ => (false, format!("extinction times {ta:?}, {tb:?}")),
    };
    verdict("A4", "finite-time extinction (N=1)", pass, detail);
}

/// Ordinary least squares, independent of the crate's fit.
fn r_squared(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    sxy * sxy / (sxx * syy)
}

#[test]
fn a05_decay_profile() {
    let t = scenario("extinction_1d");
    let run = &t.outcome.runs[0];
    let t_star = run.extinction_time().unwrap().expect("extinct");
    let s = &run.output.series;
    let (xs, ys): (Vec<f64>, Vec<f64>) = s
        .times
        .iter()
        .zip(&s.mass_sq)
        .filter(|(ti, _)| **ti >= 0.2 * t_star && **ti <= 0.9 * t_star)
        .map(|(ti, m)| (*ti, m.sqrt().sqrt()))
        .unzip();
    let r2 = r_squared(&xs, &ys);
    verdict(
        "A5",
        "square-root-linear decay profile",
        r2 >= 0.98,
        format!("R² = {r2:.5} (≥ 0.98) over {} samples on [0.2T*, 0.9T*]", xs.len()),
    );
}

/// Bound dominates all samples from t0 and equals one of them to 1e-9.
fn tight_fit(series: &satnls_core::DiagSeries, dim: usize) -> (f64, bool, bool) {
    let p = fit_decay_constant(series, dim, 0.0).unwrap();
    let mut dominates = true;
    let mut touches = false;
    for (i, (ti, m)) in series.times.iter().zip(&series.mass_sq).enumerate() {
        let data = m.sqrt();
        let bound = bound_curve(&p, *ti).unwrap();
        dominates &= data <= bound * (1.0 + 1e-12);
        touches |= i > 0 && data > 0.0 && (bound - data).abs() <= 1e-9 * data;
    }
    (p.c, dominates, touches)
}

#[test]
fn a06_decay_bounds_2d_3d() {
    let two = scenario("exp_decay_2d");
    let three = scenario("algebraic_decay_3d");
    assert_eq!(two.outcome.runs[0].model.grid.dim(), 2);
    assert_eq!(three.outcome.runs[0].model.grid.dim(), 3);
    let (c2, dom2, touch2) = tight_fit(&two.outcome.runs[0].output.series, 2);
    let (c3, dom3, touch3) = tight_fit(&three.outcome.runs[0].output.series, 3);
    verdict(
        "A6",
        "exponential (N=2) and algebraic (N=3) decay fits",
        c2 > 0.0
            && dom2
            && touch2
            && c3 > 0.0
            && dom3
            && touch3
            && within(two.elapsed, 120.0)
            && within(three.elapsed, 120.0),
        format!(
            "N=2 c = {c2:.4} (dominates {dom2}, touches {touch2}, {:.1}s); \
             N=3 c = {c3:.4} (dominates {dom3}, touches {touch3}, {:.1}s); budgets 120s each",
            two.elapsed.as_secs_f64(),
            three.elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn a07_bang_bang_stabilization() {
    let t = scenario("bangbang_1d");
    let run = &t.outcome.runs[0];
    let model = &run.model;
    let s = &run.output.series;
    let t_star = run.extinction_time().unwrap();
    let (pass, detail) = match t_star {
        Some(ts) => {
            let mut worst_balance = 0.0f64;
            let mut worst_f = 0.0f64;
            let mut steps = 0;
            for (ti, b) in s.times.iter().zip(&run.output.section_balance) {
                if *ti < ts {
                    continue;
                }
                steps += 1;
                worst_balance = worst_balance.max(*b);
                let f = model.forcing.eval(*ti);
                worst_f = worst_f.max(norm(&f, NormKind::Linf).unwrap());
            }
            (
                worst_f <= model.mu && worst_balance <= 1e-12 && steps > 1 && within(t.elapsed, 60.0),
                format!(
                    "T* = {ts}; {steps} post-extinction steps, max |f| = {worst_f} (≤ μ = {}), \
                     max |iμU - f| = {worst_balance:.3e} (≤ 1e-12); {:.1}s (< 60s)",
                    model.mu,
                    t.elapsed.as_secs_f64()
                ),
            )
        }
        None => (false, "no extinction".into()),
    };
    verdict("A7", "bang-bang stabilization", pass, detail);
}

#[test]
fn a08_continuous_dependence() {
    let t = scenario("contraction_pair");
    let o = &t.outcome;
    let pair = o.pair.as_ref().unwrap();
    let times = &o.runs[0].output.series.times;
    let d = &pair.field_diffs;
    let df = &pair.forcing_diffs;
    let dt = find("contraction_pair").unwrap().config.dt;
    let slack = 1e-8 + 2.0 * dt * df.iter().copied().fold(0.0, f64::max);
    // Direct check over all ordered pairs s <= t.
    let mut cum = vec![0.0; times.len()];
    for i in 1..times.len() {
        cum[i] = cum[i - 1] + 0.5 * (times[i] - times[i - 1]) * (df[i] + df[i - 1]);
    }
    let mut worst = f64::NEG_INFINITY;
    for j in 0..times.len() {
        for i in j..times.len() {
            worst = worst.max(d[i] - d[j] - (cum[i] - cum[j]));
        }
    }
    verdict(
        "A8",
        "continuous dependence",
        worst <= slack && within(t.elapsed, 60.0),
        format!(
            "max excess {worst:.3e} over {} time pairs (≤ slack {slack:.3e}); {:.1}s (< 60s)",
            times.len() * (times.len() + 1) / 2,
            t.elapsed.as_secs_f64()
        ),
    );
}

fn random_field(rng: &mut ChaCha8Rng, grid: Grid) -> ComplexField {
    let values = (0..grid.len())
        .map(|_| {
            if rng.gen_bool(0.25) {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            }
        })
        .collect();
    ComplexField::from_values(grid, values).unwrap()
}

#[test]
fn a09_monotonicity() {
    let start = Instant::now();
    let grid = Grid::new(1, 1.0, 16).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = f64::INFINITY;
    let mut worst_eps = [f64::INFINITY; 2];
    for _ in 0..1000 {
        let u1 = random_field(&mut rng, grid);
        let u2 = random_field(&mut rng, grid);
        let mu = rng.gen_range(0.1..2.0);
        let f1 = random_field(&mut rng, grid).scaled(Complex64::new(2.0, 0.0));
        let f2 = random_field(&mut rng, grid).scaled(Complex64::new(2.0, 0.0));
        let s1 = saturated_section(&u1, &f1, mu, 1e-14).unwrap();
        let s2 = saturated_section(&u2, &f2, mu, 1e-14).unwrap();
        let l1 = norm(&u1.sub(&u2).unwrap(), NormKind::L1).unwrap();
        let p = monotonicity_pairing(&u1, &s1.values, &u2, &s2.values).unwrap();
        worst = worst.min(p + 1e-12 * l1);
        for (k, eps) in [1e-2, 1e-8].into_iter().enumerate() {
            let g1 = g_eps(&u1, eps).unwrap();
            let g2 = g_eps(&u2, eps).unwrap();
            let p = monotonicity_pairing(&u1, &g1, &u2, &g2).unwrap();
            worst_eps[k] = worst_eps[k].min(p + 1e-12 * l1);
        }
    }
    let elapsed = start.elapsed();
    verdict(
        "A9",
        "monotonicity of sections",
        worst >= 0.0 && worst_eps.iter().all(|w| *w >= 0.0) && within(elapsed, 5.0),
        format!(
            "min (pairing + 1e-12‖u1-u2‖₁): sections {worst:.3e}, g_eps(1e-2) {:.3e}, \
             g_eps(1e-8) {:.3e} (all ≥ 0) over 1000 pairs; {:.2}s (< 5s)",
            worst_eps[0],
            worst_eps[1],
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn a10_yn_norms() {
    let start = Instant::now();
    // h = 0.01 with cell edges at 0 and 1.
    let grid = Grid::new(1, 2.005, 400).unwrap();
    let f = ComplexField::from_fn(grid, |x| {
        Complex64::new(if x[0] > 0.0 && x[0] < 1.0 { 1.0 } else { 0.0 }, 0.0)
    });
    let y1 = yn_norm(&f, 1).unwrap();
    let y3 = yn_norm(&f, 3).unwrap();
    let y100 = yn_norm(&f, 100).unwrap();
    let ok_closed = (y1 - 2.0).abs() <= 1e-6
        && (y3 - 12f64.powf(0.25)).abs() <= 1e-6
        && y100 - 1.0 <= 0.07;

    let wide = Grid::new(1, 8.0, 800).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut chain_ok = true;
    let mut min_margin = f64::INFINITY;
    for _ in 0..100 {
        let a = rng.gen_range(-6.0..5.0);
        let b = a + rng.gen_range(0.2..2.5);
        let amp = rng.gen_range(0.05..3.0);
        let g = ComplexField::from_fn(wide, |x| {
            if x[0] > a && x[0] < b {
                Complex64::new(amp * (1.0 + (3.0 * x[0]).sin()), amp * (x[0] - a))
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let l1 = norm(&g, NormKind::L1).unwrap();
        for n in [1, 2, 5, 10] {
            let y = yn_norm(&g, n).unwrap();
            chain_ok &= l1 <= y * (1.0 + 1e-8);
            min_margin = min_margin.min(y / l1 - 1.0);
        }
    }
    let elapsed = start.elapsed();
    verdict(
        "A10",
        "Y_n norms",
        ok_closed && chain_ok && within(elapsed, 5.0),
        format!(
            "Y_1 = {y1:.9}, Y_3 = {y3:.9} (12^(1/4) = {:.9}), Y_100 - 1 = {:.4} (≤ 0.07); \
             L¹ ≤ Y_n on 100 random f: {chain_ok} (min relative margin {min_margin:.3e}); {:.2}s (< 5s)",
            12f64.powf(0.25),
            y100 - 1.0,
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn a11_mollifier_bounds() {
    let start = Instant::now();
    let grid = Grid::new(1, 2.0, 3999).unwrap();
    let indicator = ComplexField::from_fn(grid, |x| {
        Complex64::new(if x[0].abs() <= 0.5 { 1.0 } else { 0.0 }, 0.0)
    });
    let l1 = norm(&indicator, NormKind::L1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut young_ok = true;
    for _ in 0..20 {
        let u = random_field(&mut rng, grid);
        let m = mollify(&u, rng.gen_range(1..80), 1).unwrap();
        young_ok &= norm(&m, NormKind::L1).unwrap() <= norm(&u, NormKind::L1).unwrap() * (1.0 + 1e-8);
    }
    let mut errors = Vec::new();
    for ell in [4, 16, 64] {
        let m = mollify(&indicator, ell, 1).unwrap();
        young_ok &= norm(&m, NormKind::L1).unwrap() <= l1 * (1.0 + 1e-8);
        errors.push(norm(&m.sub(&indicator).unwrap(), NormKind::L1).unwrap());
    }
    let decreasing = errors.windows(2).all(|w| w[1] < w[0]);
    let elapsed = start.elapsed();
    verdict(
        "A11",
        "mollifier bounds",
        young_ok && decreasing && errors[2] <= 1e-2 && within(elapsed, 5.0),
        format!(
            "L¹ contraction {young_ok}; indicator errors {:.5}, {:.5}, {:.5} at ℓ = 4, 16, 64 \
             (decreasing {decreasing}; final ≤ 1e-2 required); {:.2}s (< 5s)",
            errors[0],
            errors[1],
            errors[2],
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn a12_counterexample_separation() {
    let start = Instant::now();
    // h = 0.01 with a node at -0.5.
    let grid = Grid::new(1, 8.0, 1599).unwrap();
    let hand = arctan_counterexample_sep(1.0, 0.0, &grid).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut min_sep = f64::INFINITY;
    for _ in 0..100 {
        let t: f64 = rng.gen_range(-5.0..5.0);
        let mut s: f64 = rng.gen_range(-5.0..5.0);
        if s == t {
            s += 0.5;
        }
        min_sep = min_sep.min(arctan_counterexample_sep(t, s, &grid).unwrap());
    }
    let elapsed = start.elapsed();
    verdict(
        "A12",
        "counterexample separation",
        min_sep >= 0.5 - 1e-6 && (hand - 1.6).abs() <= 1e-6 && within(elapsed, 1.0),
        format!(
            "min separation {min_sep:.6} over 100 pairs (≥ 0.5 - 1e-6); (t,s) = (1,0) gives {hand:.12} (1.6); {:.3}s (< 1s)",
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn a13_cross_validation() {
    let start = Instant::now();
    let s = find("extinction_1d").unwrap();
    let model = s.model.build(&s.grid).unwrap();
    let u0 = s.u0.sample(&s.grid).unwrap();
    let n0 = norm(&u0, NormKind::L2).unwrap();
    let implicit = |eps: f64| SolverConfig {
        scheme: Scheme::BackwardEulerReg,
        eps,
        ..s.config.clone()
    };
    let sup = cross_validate(&model, &s.config, &implicit(1e-8), &u0).unwrap() / n0;
    let eps = [1e-2, 1e-4, 1e-6, 1e-8];
    let diffs: Vec<f64> = eps
        .windows(2)
        .map(|w| cross_validate(&model, &implicit(w[0]), &implicit(w[1]), &u0).unwrap())
        .collect();
    let monotone = diffs.windows(2).all(|w| w[1] < w[0]);
    let elapsed = start.elapsed();
    verdict(
        "A13",
        "cross-validation",
        sup <= 0.05 && monotone && within(elapsed, 180.0),
        format!(
            "sup ‖u_split - u_impl‖/‖u0‖ = {sup:.3e} (≤ 0.05); inter-eps differences {:.3e}, {:.3e}, {:.3e} \
             (monotone {monotone}); {:.1}s (< 180s)",
            diffs[0],
            diffs[1],
            diffs[2],
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn a14_a_priori_and_h1_bounds() {
    let mut lines = Vec::new();
    let mut pass = true;
    for s in catalog() {
        let t = scenario(s.name);
        for run in t.outcome.runs.iter() {
            let series = &run.output.series;
            // a-priori bound, recomputed here from the forcing.
            let grid = run.model.grid;
            let mut buf = vec![Complex64::new(0.0, 0.0); grid.len()];
            let fnorm: Vec<f64> = series
                .times
                .iter()
                .map(|&ti| {
                    run.model.forcing.eval_into(ti, &mut buf);
                    l2_values(&grid, &buf)
                })
                .collect();
            let u0 = series.mass_sq[0].sqrt();
            let mut integral = 0.0;
            let mut excess = series.mass_sq[0].sqrt() - u0;
            for i in 1..series.len() {
                integral += 0.5 * (series.times[i] - series.times[i - 1]) * (fnorm[i] + fnorm[i - 1]);
                excess = excess.max(series.mass_sq[i].sqrt() - (u0 + integral));
            }
            let a_ok = excess <= 1e-8;
            let h1 = h1_growth_check(series, &run.model).unwrap();
            let h1_ok = match h1.branch {
                GrowthBranch::Gradient => h1.max_violation.unwrap() <= 1e-6,
                GrowthBranch::Exponential => h1.growth_constant.unwrap().is_finite(),
            };
            pass &= a_ok && h1_ok;
            lines.push(format!(
                "{}/{}: a-priori excess {excess:.2e} ({a_ok}), H¹ {:?} {} ({h1_ok})",
                s.name,
                run.label,
                h1.branch,
                match h1.branch {
                    GrowthBranch::Gradient => format!("excess {:.2e}", h1.max_violation.unwrap()),
                    GrowthBranch::Exponential => format!("C = {:.4}", h1.growth_constant.unwrap()),
                }
            ));
        }
    }
    verdict("A14", "a-priori and H¹ bounds on the catalog", pass, lines.join("; "));
}
