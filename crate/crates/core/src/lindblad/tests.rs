use ndarray::Array2;

use super::*;
use crate::fock::{annihilator, make_space, Operator};
use crate::model::{build_two_mode_system, build_two_mode_system_in, derive_rates, Basis, Jump, JumpKind, SystemOperators, TwoModeParams};
use crate::C64;

fn single_mode(d: usize, kappa: f64) -> SystemOperators {
    let space = make_space(&[d]).unwrap();
    let a = annihilator(&space, 0).unwrap();
    SystemOperators {
        hamiltonian: Operator::zero(&space),
        drive: Operator::zero(&space),
        jumps: vec![Jump {
            op: &a * kappa.sqrt(),
            kind: JumpKind::Local(0),
        }],
        output: a,
        eta: 0.0,
        fingerprint: String::new(),
        space,
    }
}

fn fig2_system(n_eta: f64, d: usize) -> SystemOperators {
    let p = TwoModeParams::fig2().with_n_eta(n_eta).unwrap();
    build_two_mode_system_in(&p, &make_space(&[d, d]).unwrap(), Basis::Normal).unwrap()
}

#[test]
fn empty_generator_is_zero() {
    let mut sys = single_mode(3, 1.0);
    sys.jumps.clear();
    let l = build_liouvillian(&sys).unwrap();
    assert_eq!(l.norm(), 0.0);
}

#[test]
fn vectorization_convention() {
    let rho = Array2::from_shape_fn((3, 3), |(i, j)| C64::new(i as f64, j as f64));
    let v = vectorize(&rho);
    assert_eq!(v[1 + 2 * 3], rho[[1, 2]]);
    assert_eq!(unvectorize(&v, 3), rho);
}

#[test]
fn single_mode_decay_at_twice_kappa() {
    let kappa = 0.7;
    let sys = single_mode(2, kappa);
    let l = build_liouvillian(&sys).unwrap();
    let one = DensityMatrix::basis_state(&sys.space, 1);
    for t in [0.0, 0.3, 1.1, 4.0] {
        let rho = evolve(&l, &one, t).unwrap();
        let p1 = rho.matrix()[[1, 1]].re;
        assert!((p1 - (-2.0 * kappa * t).exp()).abs() < 1e-13, "t = {t}");
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
    }
    let ss = steady_state(&l).unwrap();
    assert!((ss.matrix()[[0, 0]].re - 1.0).abs() < 1e-12);
}

#[test]
fn evolution_at_zero_is_identity() {
    let sys = fig2_system(1.0, 3);
    let l = build_liouvillian(&sys).unwrap();
    let rho = DensityMatrix::basis_state(&sys.space, 4);
    assert_eq!(evolve(&l, &rho, 0.0).unwrap(), rho);
    assert!(evolve(&l, &rho, -1.0).is_err());
}

#[test]
fn trace_preservation_of_fig2_generator() {
    let l = build_liouvillian(&fig2_system(1.0, 5)).unwrap();
    assert!(l.trace_defect() < 1e-14, "{}", l.trace_defect());
}

#[test]
fn undriven_steady_state_is_vacuum() {
    let p = TwoModeParams::fig2().with_kappa_0(1e-3);
    let sys = build_two_mode_system(&p, &make_space(&[4, 4]).unwrap()).unwrap();
    let rho = steady_state(&build_liouvillian(&sys).unwrap()).unwrap();
    assert!((rho.matrix()[[0, 0]].re - 1.0).abs() < 1e-12);
}

#[test]
fn dark_mode_without_drive_has_no_unique_steady_state() {
    let p = TwoModeParams {
        gamma_1r: 0.2,
        gamma_1l: 0.2,
        gamma_2r: 0.5,
        gamma_2l: 0.5,
        kappa_0: 0.0,
        g: 0.0,
        delta: 0.0,
        eta: 0.0,
    };
    let sys = build_two_mode_system(&p, &make_space(&[3, 3]).unwrap()).unwrap();
    let err = steady_state(&build_liouvillian(&sys).unwrap()).unwrap_err();
    assert!(err.is_solver_failure(), "{err}");
}

/// Linear steady state: with g = 0 the amplitudes solve
/// `(iΔ + M) α = −i√2 η s_R` where `M` is the decay matrix, and the state
/// is the coherent state |α₁, α₂⟩.
#[test]
fn linear_steady_state_is_coherent() {
    let p = TwoModeParams::from_asymmetry(1.0, 0.3, 0.6, 0.0)
        .with_delta(0.4)
        .with_kappa_0(0.05)
        .with_eta(0.12);
    let sys = build_two_mode_system(&p, &make_space(&[8, 8]).unwrap()).unwrap();
    let rho = steady_state(&build_liouvillian(&sys).unwrap()).unwrap();

    let g12 = (p.gamma_1r * p.gamma_2r).sqrt() + (p.gamma_1l * p.gamma_2l).sqrt();
    let m = [
        [C64::new(p.gamma_1r + p.gamma_1l + p.kappa_0, p.delta), C64::new(g12, 0.0)],
        [C64::new(g12, 0.0), C64::new(p.gamma_2r + p.gamma_2l + p.kappa_0, p.delta)],
    ];
    let f = C64::new(0.0, -(2f64).sqrt() * p.eta);
    let b = [f * p.gamma_1r.sqrt(), f * p.gamma_2r.sqrt()];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let alpha = [
        (b[0] * m[1][1] - m[0][1] * b[1]) / det,
        (m[0][0] * b[1] - m[1][0] * b[0]) / det,
    ];
    for (mode, want) in alpha.iter().enumerate() {
        let a = annihilator(&sys.space, mode).unwrap();
        let got = a.expectation(rho.matrix());
        assert!((got - want).norm() < 1e-9, "mode {mode}: {got} vs {want}");
        let n = a.adjoint().compose(&a).unwrap().expectation(rho.matrix()).re;
        assert!((n - want.norm_sqr()).abs() < 1e-9);
    }
}

#[test]
fn linear_system_is_coherent_at_all_delays() {
    let p = TwoModeParams::fig2().with_g(0.0).with_kappa_0(2e-8).with_n_eta(1e-3).unwrap();
    let sys = build_two_mode_system_in(&p, &make_space(&[5, 5]).unwrap(), Basis::Normal).unwrap();
    let l = build_liouvillian(&sys).unwrap();
    let gm = derive_rates(&p).unwrap().gamma_minus;
    let grid = default_tau_grid(8.0 / gm, 24).unwrap();
    let trace = g2_regression(&sys, &l, &grid).unwrap();
    for (t, g) in trace.tau_grid.iter().zip(&trace.g2_values) {
        assert!((g - 1.0).abs() < 1e-6, "tau {t}: {g}");
    }
}

#[test]
fn fig2_weak_drive_numbers() {
    let sys = fig2_system(1e-3, 5);
    let l = build_liouvillian(&sys).unwrap();
    let rho = steady_state(&l).unwrap();
    rho.check_physical().unwrap();
    assert!(relative_residual(&l, &rho) < 1e-12);
    let obs = observe(&sys, &rho).unwrap();
    assert!((obs.g2_zero - 3.9222e-6).abs() < 1e-3 * 3.9222e-6, "{}", obs.g2_zero);
    assert!((obs.transmission.re + 0.998012).abs() < 1e-5, "{}", obs.transmission);

    // flux balance: the drive flux η² leaves as reflected flux ⟨K†K⟩ plus
    // what J_L carries away
    let left: f64 = sys
        .jumps
        .iter()
        .zip(jump_fluxes(&sys, &rho))
        .filter(|(j, _)| j.kind == JumpKind::Collective(crate::model::Environment::L))
        .map(|(_, f)| f)
        .sum();
    let out = output_flux(&sys, &rho) + left;
    assert!((out / (sys.eta * sys.eta) - 1.0).abs() < 1e-8, "{out:e}");
}

#[test]
fn regression_matches_direct_moment_at_zero_delay() {
    let sys = fig2_system(1.0, 5);
    let l = build_liouvillian(&sys).unwrap();
    let rho = steady_state(&l).unwrap();
    let direct = g2_zero_direct(&sys, &rho).unwrap();
    let trace = g2_regression_from_state(&sys, &l, &rho, &[0.0, 1.0]).unwrap();
    assert!((trace.g2_values[0] - direct).abs() <= 1e-9 * direct);
}

#[test]
fn long_evolution_reaches_steady_state() {
    let p = TwoModeParams::from_asymmetry(1.0, 0.2, 0.05, 0.01).with_eta(2e-3);
    let sys = build_two_mode_system_in(&p, &make_space(&[4, 4]).unwrap(), Basis::Normal).unwrap();
    let l = build_liouvillian(&sys).unwrap();
    let ss = steady_state(&l).unwrap();
    let gm = derive_rates(&p).unwrap().gamma_minus;
    let rho = evolve(&l, &DensityMatrix::vacuum(&sys.space), 60.0 / gm).unwrap();
    assert!((rho.trace().re - 1.0).abs() < 1e-9);
    assert!(rho.hermiticity_defect() < 1e-9, "{:e}", rho.hermiticity_defect());
    assert!(rho.trace_distance(&ss).unwrap() < 1e-8);
}

#[test]
fn trace_survives_long_stiff_evolution() {
    let sys = fig2_system(1.0, 4);
    let l = build_liouvillian(&sys).unwrap();
    let gm = derive_rates(&TwoModeParams::fig2()).unwrap().gamma_minus;
    let times = [1.0, 1.0 / gm, 60.0 / gm];
    for rho in evolve_many(&l, &DensityMatrix::vacuum(&sys.space), &times).unwrap() {
        assert!((rho.trace() - C64::new(1.0, 0.0)).norm() < 1e-9);
    }
}

#[test]
fn iterative_and_direct_steady_states_agree() {
    let sys = fig2_system(0.5, 4);
    let l = build_liouvillian(&sys).unwrap();
    let direct = steady_state(&l).unwrap();
    let iterative = steady_state_iterative(&l, &SteadyOptions::default()).unwrap();
    assert!(direct.trace_distance(&iterative).unwrap() < 1e-9);

    let sparse = build_liouvillian_as(&sys, StorageKind::Sparse).unwrap();
    let again = steady_state(&sparse).unwrap();
    assert!(direct.trace_distance(&again).unwrap() < 1e-9);
}

#[test]
fn antibunching_time_interpolates() {
    let trace = CorrelationTrace::new(
        vec![0.0, 1.0, 2.0, 3.0],
        vec![0.0, 0.2, 0.6, 1.0],
        String::new(),
        String::new(),
    )
    .unwrap();
    let level = (-1.0f64).exp();
    let want = 1.0 + (level - 0.2) / 0.4;
    assert!((antibunching_time(&trace).unwrap() - want).abs() < 1e-15);

    let flat = CorrelationTrace::new(vec![0.0, 1.0], vec![1.0, 1.0], String::new(), String::new()).unwrap();
    assert_eq!(antibunching_time(&flat), None);
    let low = CorrelationTrace::new(vec![0.0, 1.0], vec![0.0, 0.1], String::new(), String::new()).unwrap();
    assert_eq!(antibunching_time(&low), None);
}

#[test]
fn grids_are_validated() {
    assert!(check_grid(&[0.0, 1.0, 2.0]).is_ok());
    assert!(check_grid(&[0.1, 1.0]).is_err());
    assert!(check_grid(&[0.0, 1.0, 1.0]).is_err());
    let g = default_tau_grid(8.0, 200).unwrap();
    assert_eq!(g.len(), 200);
    assert_eq!(g[0], 0.0);
    assert!((g[199] - 8.0).abs() < 1e-12);
    check_grid(&g).unwrap();
}



