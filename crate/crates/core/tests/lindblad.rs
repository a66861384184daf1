use blockade::fock::make_space;
use blockade::lindblad::{
    antibunching_time, build_liouvillian, evolve, evolve_many, g2_regression_from_state, g2_zero_direct, jump_fluxes,
    linear_tau_grid, output_flux, relative_residual, steady_state, transmission_numeric, CorrelationTrace,
    DensityMatrix,
};
use blockade::model::{build_two_mode_system_in, derive_rates, Basis, TwoModeParams};
use blockade::C64;
use proptest::prelude::*;

#[test]
fn far_detuned_drive_is_reflectionless() {
    let p = TwoModeParams::from_asymmetry(1.0, 0.2, 0.5, 0.0).with_delta(1e4).with_eta(0.05);
    let sys = build_two_mode_system_in(&p, &make_space(&[3, 3]).unwrap(), Basis::Normal).unwrap();
    let t = transmission_numeric(&sys, &build_liouvillian(&sys).unwrap()).unwrap();
    assert!((t - C64::new(1.0, 0.0)).norm() < 1e-3, "{t}");
}

#[test]
fn undriven_transmission_is_rejected() {
    let p = TwoModeParams::fig2();
    let sys = build_two_mode_system_in(&p, &make_space(&[3, 3]).unwrap(), Basis::Normal).unwrap();
    assert!(transmission_numeric(&sys, &build_liouvillian(&sys).unwrap()).is_err());
}

#[test]
fn weak_drive_flux_is_eta_squared_t_squared() {
    let p = TwoModeParams::fig2().with_n_eta(1e-3).unwrap();
    let sys = build_two_mode_system_in(&p, &make_space(&[5, 5]).unwrap(), Basis::Normal).unwrap();
    let l = build_liouvillian(&sys).unwrap();
    let rho = steady_state(&l).unwrap();
    let t = transmission_numeric(&sys, &l).unwrap();
    let n = output_flux(&sys, &rho);
    assert!((n / (p.eta * p.eta * t.norm_sqr()) - 1.0).abs() < 1e-2);
}

#[test]
fn crossing_converges_under_grid_refinement() {
    // g²(τ) = (1 − e^{−τ})² crosses 1/e at τ = −ln(1 − e^{−1/2})
    let exact = -(1.0 - (-0.5f64).exp()).ln();
    let mut last = f64::INFINITY;
    for n in [11, 41, 161, 641] {
        let grid = linear_tau_grid(5.0, n).unwrap();
        let values = grid.iter().map(|t| (1.0 - (-t).exp()).powi(2)).collect();
        let trace = CorrelationTrace::new(grid, values, String::new(), String::new()).unwrap();
        let err = (antibunching_time(&trace).unwrap() - exact).abs();
        assert!(err < last);
        last = err;
    }
    assert!(last < 1e-5);
}

fn params() -> impl Strategy<Value = TwoModeParams> {
    (0.05f64..1.0, 0.05f64..1.0, 0.1f64..1.0, 0.1f64..1.0, 0.0f64..0.2, -0.5f64..0.5, 0.01f64..0.3).prop_map(
        |(a, b, c, d, g, delta, eta)| TwoModeParams {
            gamma_1r: a,
            gamma_1l: b,
            gamma_2r: c,
            gamma_2l: d,
            kappa_0: 0.0,
            g,
            delta,
            eta,
        },
    )
}

fn basis() -> impl Strategy<Value = Basis> {
    prop_oneof![Just(Basis::Bare), Just(Basis::Normal)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generators_preserve_trace(p in params(), basis in basis(), kappa in 0.0f64..0.1) {
        let sys = build_two_mode_system_in(&p.with_kappa_0(kappa), &make_space(&[3, 4]).unwrap(), basis).unwrap();
        prop_assert!(build_liouvillian(&sys).unwrap().trace_defect() <= 1e-10);
    }

    #[test]
    fn steady_states_are_physical_and_balance_flux(p in params(), basis in basis()) {
        let sys = build_two_mode_system_in(&p, &make_space(&[5, 5]).unwrap(), basis).unwrap();
        let l = build_liouvillian(&sys).unwrap();
        let rho = steady_state(&l).unwrap();
        prop_assert!(relative_residual(&l, &rho) <= 1e-10);
        rho.check_physical().unwrap();
        prop_assume!(rho.edge_population() < 1e-6);
        // drive flux η² leaves through R (the output) and through L
        let left: f64 = sys
            .jumps
            .iter()
            .zip(jump_fluxes(&sys, &rho))
            .filter(|(j, _)| format!("{:?}", j.kind) == "Collective(L)")
            .map(|(_, f)| f)
            .sum();
        let total = output_flux(&sys, &rho) + left;
        prop_assert!((total / (p.eta * p.eta) - 1.0).abs() < 1e-2, "{}", total);
    }

    #[test]
    fn evolution_keeps_trace_and_hermiticity(p in params(), t in 0.0f64..50.0) {
        let sys = build_two_mode_system_in(&p, &make_space(&[4, 4]).unwrap(), Basis::Normal).unwrap();
        let l = build_liouvillian(&sys).unwrap();
        let rho0 = DensityMatrix::basis_state(&sys.space, sys.space.index(&[1, 1]));
        let rho = evolve(&l, &rho0, t).unwrap();
        prop_assert!((rho.trace() - C64::new(1.0, 0.0)).norm() <= 1e-9);
        prop_assert!(rho.hermiticity_defect() <= 1e-9);
        prop_assert!(rho.min_eigenvalue().unwrap() >= -1e-8);
    }

    #[test]
    fn regression_starts_at_the_direct_moment(p in params()) {
        let sys = build_two_mode_system_in(&p, &make_space(&[4, 4]).unwrap(), Basis::Normal).unwrap();
        let l = build_liouvillian(&sys).unwrap();
        let rho = steady_state(&l).unwrap();
        let direct = g2_zero_direct(&sys, &rho).unwrap();
        let trace = g2_regression_from_state(&sys, &l, &rho, &[0.0, 0.5]).unwrap();
        prop_assert!((trace.g2_values[0] - direct).abs() <= 1e-9 * direct);
    }

    #[test]
    fn ladder_agrees_with_single_propagations(p in params()) {
        let sys = build_two_mode_system_in(&p, &make_space(&[3, 3]).unwrap(), Basis::Normal).unwrap();
        let l = build_liouvillian(&sys).unwrap();
        let rho0 = DensityMatrix::basis_state(&sys.space, sys.space.index(&[2, 0]));
        let gm = derive_rates(&p).unwrap().gamma_minus.max(1e-3);
        let times = [0.0, 0.1, 1.0, 3.0 / gm];
        let many = evolve_many(&l, &rho0, &times).unwrap();
        for (t, rho) in times.iter().zip(&many) {
            let one = evolve(&l, &rho0, *t).unwrap();
            prop_assert!(rho.trace_distance(&one).unwrap() <= 1e-9);
        }
    }
}
