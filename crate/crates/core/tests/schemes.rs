use std::f64::consts::PI;
use std::sync::Arc;

use memstep::grid::{sample_function, Grid2D, GridFunction, SpdOperator};
use memstep::kernels::{load_builtin_prony, PronySeries};
use memstep::schemes::{
    auxiliary_residuals, energy, general_step, quadrature_init, quadrature_step,
    scalar_ode_oracle, soe_init, soe_step, ForcingEvaluation, ProblemSpec, QuadratureRule,
    SchemeConfig, AUX_RESIDUAL_TOL,
};
use proptest::prelude::*;

// Independent high-precision values: numerical integration of the scalar
// system, and direct solves of the first step equations.
const SCALAR_ODE: [(f64, f64); 3] = [
    (1.0, -0.223_097_995_476_458_860_88),
    (2.5, 0.066_226_238_903_137_833_066),
    (10.0, 0.053_459_529_254_257_809_385),
];
const SOE_FIRST_STEP: (f64, f64) = (0.995_882_291_271_641_523_84, 0.004_946_146_622_373_512_555_9);
const HISTORY_FIRST_STEP: f64 = 0.991_908_653_713_540_110_79;

fn scalar_problem(kernel: PronySeries, lambda: f64) -> ProblemSpec {
    let g = Grid2D::square(2).unwrap();
    ProblemSpec::new(
        SpdOperator::diagonal_scaling(vec![lambda]).unwrap(),
        kernel,
        GridFunction::constant(g, 1.0),
    )
    .unwrap()
}

fn model(n: usize) -> ProblemSpec {
    let g = Grid2D::square(n).unwrap();
    let u0 = sample_function(g, |x, y| x * y * (PI * x).sin() * (PI * y).sin());
    ProblemSpec::new(SpdOperator::laplacian(g), load_builtin_prony(0.5).unwrap(), u0).unwrap()
}

#[test]
fn oracle_matches_numerical_integration() {
    for (t, u) in SCALAR_ODE {
        let v = scalar_ode_oracle(1.0, 0.5, 4.0, 1.0, t).unwrap();
        assert!((v - u).abs() < 1e-13, "t = {t}: {v} vs {u}");
    }
}

#[test]
fn first_soe_step_matches_direct_solve() {
    let p = scalar_problem(load_builtin_prony(0.5).unwrap(), 1.0);
    let cfg = SchemeConfig::new(0.5, 0.1, 1).unwrap();
    let s = soe_step(&p, &cfg, &soe_init(&p)).unwrap();
    assert!((s.y.values()[0] - SOE_FIRST_STEP.0).abs() < 1e-13);
    assert!((s.aux[11].values()[0] - SOE_FIRST_STEP.1).abs() < 1e-13);
}

#[test]
fn first_history_step_matches_quadrature() {
    let p = scalar_problem(load_builtin_prony(0.5).unwrap(), 1.0);
    let cfg = SchemeConfig::new(1.0, 0.1, 1).unwrap();
    let h = quadrature_init(&p, &cfg, QuadratureRule::Product, None).unwrap();
    let h = quadrature_step(&p, &cfg, h).unwrap();
    assert!((h.y().values()[0] - HISTORY_FIRST_STEP).abs() < 1e-13);
}

#[test]
fn scalar_orders() {
    let p = scalar_problem(PronySeries::single(1.0, 0.5).unwrap(), 4.0);
    for (sigma, order) in [(0.5, 2.0), (1.0, 1.0)] {
        let mut errors = Vec::new();
        for steps in [800usize, 1600, 3200] {
            let cfg = SchemeConfig::covering(sigma, 10.0, steps).unwrap();
            let mut s = soe_init(&p);
            let mut err = 0.0f64;
            for _ in 0..steps {
                s = soe_step(&p, &cfg, &s).unwrap();
                let exact = scalar_ode_oracle(1.0, 0.5, 4.0, 1.0, s.t).unwrap();
                err = err.max((s.y.values()[0] - exact).abs());
            }
            errors.push(err);
        }
        for w in errors.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!((rate - order).abs() < 0.1, "sigma {sigma}: rate {rate}");
        }
    }
}

#[test]
fn nodal_rule_also_converges() {
    let p = scalar_problem(PronySeries::single(1.0, 0.5).unwrap(), 4.0);
    let cfg = SchemeConfig::covering(0.5, 2.0, 400).unwrap();
    let mut h = quadrature_init(&p, &cfg, QuadratureRule::Nodal, None).unwrap();
    for _ in 0..cfg.n_steps {
        h = quadrature_step(&p, &cfg, h).unwrap();
    }
    let exact = scalar_ode_oracle(1.0, 0.5, 4.0, 1.0, 2.0).unwrap();
    assert!((h.y().values()[0] - exact).abs() < 1e-3);
}

#[test]
fn reaction_and_mass_keep_energy_bounded() {
    let g = Grid2D::square(8).unwrap();
    let p = model(8)
        .with_mass(SpdOperator::constant_scaling(g, 2.0).unwrap())
        .unwrap()
        .with_reaction(SpdOperator::constant_scaling(g, 0.5).unwrap())
        .unwrap();
    let cfg = SchemeConfig::new(0.5, 0.5, 20).unwrap();
    let mut s = soe_init(&p);
    let mut e = energy(&p, &s).unwrap();
    for _ in 0..cfg.n_steps {
        s = general_step(&p, &cfg, &s).unwrap();
        let next = energy(&p, &s).unwrap();
        assert!(next <= e * (1.0 + 1e-8));
        e = next;
    }
}

#[test]
fn forcing_drives_a_steady_state() {
    // k = a e^{-bt}, A = lambda: steady state u* = phi b / (a lambda).
    let g = Grid2D::square(2).unwrap();
    let p = ProblemSpec::new(
        SpdOperator::diagonal_scaling(vec![2.0]).unwrap(),
        PronySeries::single(1.0, 3.0).unwrap(),
        GridFunction::zeros(g),
    )
    .unwrap()
    .with_forcing(Arc::new(move |_| GridFunction::constant(g, 1.0)));
    for mode in [ForcingEvaluation::Point, ForcingEvaluation::Blend] {
        let mut cfg = SchemeConfig::new(1.0, 0.1, 2000).unwrap();
        cfg.forcing = mode;
        let mut s = soe_init(&p);
        for _ in 0..cfg.n_steps {
            s = soe_step(&p, &cfg, &s).unwrap();
        }
        assert!((s.y.values()[0] - 1.5).abs() < 1e-8);
    }
}

fn arb_kernel() -> impl Strategy<Value = PronySeries> {
    prop::collection::vec((0.01f64..2.0, 0.0f64..500.0), 1..6)
        .prop_map(|pairs| PronySeries::from_pairs(&pairs).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn energy_is_non_increasing(
        kernel in arb_kernel(),
        sigma in 0.5f64..=1.0,
        log_tau in -3.0f64..1.5,
        values in prop::collection::vec(-1.0f64..1.0, 25),
    ) {
        let g = Grid2D::square(6).unwrap();
        let u0 = GridFunction::from_values(g, values).unwrap();
        let p = ProblemSpec::new(SpdOperator::laplacian(g), kernel, u0).unwrap();
        let cfg = SchemeConfig::new(sigma, 10f64.powf(log_tau), 8).unwrap();
        let mut s = soe_init(&p);
        let mut e = energy(&p, &s).unwrap();
        for _ in 0..cfg.n_steps {
            let next = soe_step(&p, &cfg, &s).unwrap();
            let r = auxiliary_residuals(p.kernel(), &cfg, &s, &next).unwrap();
            prop_assert!(r.iter().all(|&r| r <= AUX_RESIDUAL_TOL), "{r:?}");
            let e_next = energy(&p, &next).unwrap();
            prop_assert!(e_next <= e * (1.0 + 1e-8), "{e_next} > {e}");
            e = e_next;
            s = next;
        }
    }

    #[test]
    fn general_step_reduces_to_soe_step(
        kernel in arb_kernel(),
        sigma in 0.1f64..=1.0,
        tau in 0.001f64..2.0,
    ) {
        let p = ProblemSpec::new(
            SpdOperator::laplacian(Grid2D::square(5).unwrap()),
            kernel,
            model(5).u0().clone(),
        ).unwrap();
        let cfg = SchemeConfig::new(sigma, tau, 3).unwrap();
        let (mut a, mut b) = (soe_init(&p), soe_init(&p));
        for _ in 0..cfg.n_steps {
            a = soe_step(&p, &cfg, &a).unwrap();
            b = general_step(&p, &cfg, &b).unwrap();
        }
        prop_assert_eq!(a, b);
    }
}
