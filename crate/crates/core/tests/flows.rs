use proptest::prelude::*;

use morse_flow::flow::{check_weak_solution_bounds, lambda_n, run_flow, FlowConfig, GridSpec, InitialData, Variant};
use morse_flow::functionals::RicciSymStepFunctional;
use morse_flow::geometry::{Grid, Symmetry};
use morse_flow::minimizer::{minimize, MinimizeOptions};
use morse_flow::oracles::exact_unnorm_factor;
use morse_flow::Error;

fn football(variant: Variant, t_end: f64, steps: usize, initial: InitialData) -> FlowConfig {
    FlowConfig {
        variant,
        t_end,
        steps,
        grid: GridSpec::Football { alpha: 0.5, n_r: 16, n_theta: 8 },
        initial,
        options: MinimizeOptions::default(),
        symmetry: Symmetry::Mirror,
    }
}

#[test]
fn lambda_closed_form_matches_projection_multiplier() {
    let cfg = football(Variant::RicciSym, 0.2, 4, InitialData::RandomSymmetric { amplitude: 0.4, seed: 11 });
    let traj = run_flow(&cfg).unwrap();
    let g = traj.grid.as_football().unwrap();
    for n in 1..traj.records.len() {
        let prev = &traj.records[n - 1].field;
        let cur = &traj.records[n].field;
        let f = RicciSymStepFunctional::new(g, traj.h(), prev).unwrap();
        let from_functional = f.lambda(cur.values());
        let closed = lambda_n(g, prev, cur, traj.h()).unwrap();
        assert!((from_functional - closed).abs() < 1e-12);
        assert_eq!(traj.records[n].lambda_n, Some(closed));
        assert!(traj.records[n].el_residual < 1e-7, "{}", traj.records[n].el_residual);
    }
}

#[test]
fn weak_solution_report_matches_ledger() {
    let cfg = football(Variant::RicciSym, 0.3, 12, InitialData::RandomSymmetric { amplitude: 0.5, seed: 5 });
    let traj = run_flow(&cfg).unwrap();
    let rep = check_weak_solution_bounds(&traj).unwrap();
    assert!(rep.passed(), "{rep:?}");
    let two_kin: f64 = 2.0 * traj.records.iter().map(|r| r.kinetic).sum::<f64>();
    assert!((rep.kinetic_integral - two_kin).abs() <= 1e-12 * (1.0 + two_kin));
    assert!(rep.max_energy <= rep.initial_energy + rep.slack);
}

#[test]
fn incomplete_trajectory_is_rejected() {
    let mut cfg = football(Variant::RicciSym, 0.5, 10, InitialData::RandomSymmetric { amplitude: 0.5, seed: 2 });
    cfg.options.max_iters = 1;
    match run_flow(&cfg) {
        Err(Error::NotConverged { step, partial, .. }) => {
            assert_eq!(step, 1);
            assert_eq!(partial.records.len(), 1);
            assert!(!partial.is_complete());
            assert!(check_weak_solution_bounds(&partial).is_err());
        }
        other => panic!("expected a non-converged step, got {other:?}"),
    }
}

#[test]
fn initial_data_is_normalized_for_sym() {
    let cfg = football(Variant::RicciSym, 0.1, 1, InitialData::Constant(0.7));
    let traj = run_flow(&cfg).unwrap();
    assert!(traj.records[0].field.max_abs() < 1e-14);
}

#[test]
fn unnorm_constant_stays_spatially_constant() {
    let cfg = football(Variant::RicciUnnorm, 0.3, 30, InitialData::Zero);
    let traj = run_flow(&cfg).unwrap();
    for r in &traj.records {
        let v = r.field.values();
        let spread = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread < 1e-12);
        // first-order scheme: the error is O(h)
        assert!(((2.0 * v[0]).exp() - exact_unnorm_factor(r.t).unwrap()).abs() < 0.02);
    }
}

#[test]
fn pme_ledger_and_monotone_dirichlet_energy() {
    let cfg = FlowConfig {
        variant: Variant::Pme { beta: 1.5 },
        t_end: 0.05,
        steps: 10,
        grid: GridSpec::Planar { lx: 2.0, ly: 1.0, n_x: 17, n_y: 9 },
        initial: InitialData::RandomSmooth { amplitude: 1.0, seed: 8 },
        options: MinimizeOptions::default(),
        symmetry: Symmetry::Mirror,
    };
    let traj = run_flow(&cfg).unwrap();
    assert!(traj.ledger_ok);
    for w in traj.records.windows(2) {
        assert!(w[1].potential <= w[0].potential + traj.ledger_slack);
    }
    let d = traj.discrete_time_derivative(3).unwrap();
    assert_eq!(d.len(), traj.grid.len());
}

#[test]
fn warm_start_from_minimizer_is_stationary() {
    let cfg = football(Variant::RicciSym, 0.1, 1, InitialData::RandomSymmetric { amplitude: 0.3, seed: 4 });
    let traj = run_flow(&cfg).unwrap();
    let g = traj.grid.as_football().unwrap();
    let f = RicciSymStepFunctional::new(g, traj.h(), &traj.records[0].field).unwrap();
    let again = minimize(&f, &traj.records[1].field, &MinimizeOptions::default()).unwrap();
    assert!(again.converged);
    assert!(again.minimizer.max_abs_diff(&traj.records[1].field) < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn ledger_holds_on_random_runs(seed in 0u64..1000, amplitude in 0.05f64..0.8, lambda in 0.1f64..0.9, sym in any::<bool>()) {
        let variant = if sym { Variant::RicciSym } else { Variant::RicciReg { lambda } };
        let cfg = football(variant, 0.2, 8, InitialData::RandomSymmetric { amplitude, seed });
        let traj = run_flow(&cfg).unwrap();
        prop_assert!(traj.ledger_ok);
        let h = traj.h();
        let e0 = traj.records[0].potential;
        let emin = traj.records.iter().map(|r| r.potential).fold(f64::INFINITY, f64::min);
        let kin: f64 = traj.records.iter().map(|r| r.kinetic).sum();
        prop_assert!(h * kin <= e0 - emin + traj.records.len() as f64 * traj.ledger_slack);
        for r in &traj.records {
            prop_assert!(r.moser_half.unwrap().is_finite());
            prop_assert!(r.moser_one.unwrap() <= r.moser_half.unwrap() + 1e-12);
        }
    }

    #[test]
    fn identical_configs_give_identical_traces(seed in 0u64..1000) {
        let cfg = football(Variant::RicciSym, 0.1, 3, InitialData::RandomSymmetric { amplitude: 0.4, seed });
        let mut a = Vec::new();
        let mut b = Vec::new();
        run_flow(&cfg).unwrap().write_trace_csv(&mut a).unwrap();
        run_flow(&cfg).unwrap().write_trace_csv(&mut b).unwrap();
        prop_assert_eq!(a, b);
    }
}
