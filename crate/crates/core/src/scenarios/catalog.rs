use super::{Expectation, Scenario, Variant};
use crate::grid::Grid;
use crate::integrators::SolverConfig;
use crate::model::{
    Amplitude, FieldSpec, ForcingSpec, ModelSpec, PotentialSpec, PotentialTerm,
};

fn line() -> Grid {
    Grid::new(1, 8.0, 512).expect("static grid")
}

/// Wide sine bump used as the default one-dimensional datum.
fn bump() -> FieldSpec {
    FieldSpec::sin_bump(0.5, 0.0, 2.0)
}

fn unit_bump_profile() -> FieldSpec {
    FieldSpec::sin_bump(1.0, 0.0, 2.0)
}

fn extinction_1d() -> Scenario {
    Scenario {
        name: "extinction_1d",
        summary: "unforced one-dimensional run reaching zero in finite time",
        grid: line(),
        model: ModelSpec::free(1.0),
        u0: bump(),
        config: SolverConfig::strang(1e-4, 0.6),
        variant: Variant::Single,
        expectations: vec![
            Expectation::ExtinctionBy { t_max: 1.0 },
            Expectation::StaysExtinct,
            Expectation::MassBalance { rel_tol: 1e-4 },
            Expectation::SqrtLinearProfile { r2_min: 0.98 },
            Expectation::CrossIntegrator {
                eps: 1e-8,
                rel_tol: 0.05,
            },
            Expectation::ExtinctionAgreement {
                eps: 1e-8,
                rel_tol: 0.05,
            },
            Expectation::DecayConstant,
            Expectation::APriori,
            Expectation::GradientBound { slack: 1e-6 },
        ],
    }
}

fn bangbang_1d() -> Scenario {
    let forcing = ForcingSpec::bangbang_capped(
        Amplitude::Oscillating {
            a0: 1.5,
            omega: 2.0,
        },
        unit_bump_profile(),
        0.5,
        0.9,
    );
    Scenario {
        name: "bangbang_1d",
        summary: "persistent forcing capped below the damping strength after a switch time",
        grid: line(),
        model: ModelSpec {
            forcing,
            ..ModelSpec::free(1.0)
        },
        u0: bump(),
        config: SolverConfig::strang(1e-3, 12.0),
        variant: Variant::Single,
        expectations: vec![
            Expectation::ExtinctionBy { t_max: 10.0 },
            Expectation::StaysExtinct,
            Expectation::ZeroSetBalance { tol: 1e-12 },
            Expectation::APriori,
            Expectation::GradientBound { slack: 1e-6 },
        ],
    }
}

fn instantaneous_1d() -> Scenario {
    let t0 = 1.0;
    Scenario {
        name: "instantaneous_1d",
        summary: "small data with forcing ramped to zero at T0, swept over the ramp size",
        grid: line(),
        model: ModelSpec {
            forcing: ForcingSpec::ramp_to_zero(unit_bump_profile(), t0, 1e-1),
            ..ModelSpec::free(1.0)
        },
        u0: bump(),
        config: SolverConfig::strang(1e-3, 2.0 * t0),
        variant: Variant::RampSweep {
            eps_stars: vec![1e-1, 1e-2, 1e-3],
        },
        expectations: vec![
            Expectation::RampExtinction { factor: 1.2 },
            Expectation::APriori,
            Expectation::GradientBound { slack: 1e-6 },
        ],
    }
}

fn exp_decay_2d() -> Scenario {
    Scenario {
        name: "exp_decay_2d",
        summary: "unforced two-dimensional decay against the exponential bound",
        grid: Grid::new(2, 8.0, 128).expect("static grid"),
        model: ModelSpec::free(1.0),
        u0: FieldSpec::gaussian(1.0, vec![0.0, 0.0], 1.0),
        config: SolverConfig::strang(2e-3, 1.0),
        variant: Variant::Single,
        expectations: vec![
            Expectation::DecayConstant,
            Expectation::APriori,
            Expectation::GradientBound { slack: 1e-6 },
        ],
    }
}

fn algebraic_decay_3d() -> Scenario {
    Scenario {
        name: "algebraic_decay_3d",
        summary: "unforced three-dimensional decay against the algebraic bound",
        grid: Grid::new(3, 6.0, 48).expect("static grid"),
        model: ModelSpec::free(1.0),
        u0: FieldSpec::gaussian(1.0, vec![0.0, 0.0, 0.0], 1.0),
        config: SolverConfig::strang(1e-2, 1.0),
        variant: Variant::Single,
        expectations: vec![
            Expectation::DecayConstant,
            Expectation::APriori,
            Expectation::GradientBound { slack: 1e-6 },
        ],
    }
}

fn stabilization() -> Scenario {
    let forcing = ForcingSpec::separable(
        Amplitude::ExpDecay {
            a0: 2.0,
            rate: 2.0,
        },
        unit_bump_profile(),
    );
    Scenario {
        name: "stabilization",
        summary: "forcing with an integrable exponential tail",
        grid: line(),
        model: ModelSpec {
            forcing,
            ..ModelSpec::free(1.0)
        },
        u0: bump(),
        config: SolverConfig::strang(1e-3, 5.0),
        variant: Variant::Single,
        expectations: vec![
            Expectation::TailVanishes {
                tail_fraction: 0.2,
                threshold: 1e-10,
            },
            Expectation::APriori,
            Expectation::GradientBound { slack: 1e-6 },
        ],
    }
}

fn contraction_pair() -> Scenario {
    let forcing = |a0: f64| {
        ForcingSpec::separable(
            Amplitude::Oscillating { a0, omega: 3.0 },
            FieldSpec::gaussian(1.0, vec![0.5], 1.0),
        )
    };
    Scenario {
        name: "contraction_pair",
        summary: "two runs with different data and forcing, compared pairwise",
        grid: line(),
        model: ModelSpec {
            forcing: forcing(0.5),
            ..ModelSpec::free(1.0)
        },
        u0: bump(),
        config: SolverConfig::strang(1e-3, 2.0),
        variant: Variant::Pair {
            model: Box::new(ModelSpec {
                forcing: forcing(0.4),
                ..ModelSpec::free(1.0)
            }),
            u0: FieldSpec::gaussian(0.4, vec![-0.3], 1.0).with_phase(1.0),
        },
        expectations: vec![
            Expectation::ContinuousDependence,
            Expectation::APriori,
            Expectation::GradientBound { slack: 1e-6 },
        ],
    }
}

fn conservation_control() -> Scenario {
    let mut config = SolverConfig::strang(1e-3, 10.0);
    // Without damping the wave reaches the walls; the control measures the
    // box dynamics, so truncation is not monitored.
    config.boundary_fail_threshold = 1.0;
    Scenario {
        name: "conservation_control",
        summary: "undamped, unforced control run with a constant real potential",
        grid: line(),
        model: ModelSpec {
            potential: PotentialSpec {
                v1: PotentialTerm::Constant { value: 1.0 },
                ..PotentialSpec::zero()
            },
            ..ModelSpec::free(0.0)
        },
        u0: bump(),
        config,
        variant: Variant::Single,
        expectations: vec![
            Expectation::MassConserved { rel_tol: 1e-9 },
            Expectation::APriori,
            Expectation::GradientBound { slack: 1e-6 },
        ],
    }
}

fn potential_run() -> Scenario {
    Scenario {
        name: "potential_run",
        summary: "displaced packet falling into a well plus an inverse-power tail",
        grid: Grid::new(1, 16.0, 512).expect("static grid"),
        model: ModelSpec {
            potential: PotentialSpec {
                v1: PotentialTerm::Well {
                    depth: 5.0,
                    width: 1.0,
                },
                v2: PotentialTerm::InversePower {
                    strength: 0.5,
                    power: 1.0,
                    core: 0.5,
                },
                beta: None,
            },
            ..ModelSpec::free(0.05)
        },
        u0: FieldSpec::gaussian(0.5, vec![-3.0], 1.0),
        config: SolverConfig::strang(1e-3, 1.5),
        variant: Variant::Single,
        expectations: vec![
            Expectation::GrowthConstantPositive,
            Expectation::APriori,
        ],
    }
}

/// Every named scenario, in a fixed order.
pub fn catalog() -> Vec<Scenario> {
    vec![
        extinction_1d(),
        bangbang_1d(),
        instantaneous_1d(),
        exp_decay_2d(),
        algebraic_decay_3d(),
        stabilization(),
        contraction_pair(),
        conservation_control(),
        potential_run(),
    ]
}
