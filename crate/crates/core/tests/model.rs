use blockade::fock::{annihilator, make_space};
use blockade::model::{
    build_four_mode_system, build_two_mode_system, build_two_mode_system_in, derive_rates, reduce_four_mode,
    validate_regime, Basis, FourModeParams, TwoModeParams,
};
use blockade::C64;
use ndarray::arr2;
use ndarray_linalg::{Eigh, UPLO};
use proptest::prelude::*;

#[test]
fn reference_dark_rate_matches_leading_order() {
    let r = derive_rates(&TwoModeParams::fig2()).unwrap();
    let leading = 0.004f64.powi(2) * 0.01 / 4.0;
    assert!((r.gamma_minus / leading - 1.0).abs() < 0.02, "{}", r.gamma_minus);
    assert!((r.x - 0.004).abs() < 1e-15 && (r.y - 0.01).abs() < 1e-15);
}

#[test]
fn symmetric_coupling_gives_dark_mode_and_undefined_ratios() {
    let p = TwoModeParams::from_asymmetry(1.0, 0.0, 0.03, 1e-3).with_kappa_0(1e-4);
    let r = derive_rates(&p).unwrap();
    assert_eq!(r.gamma_minus, 0.0);
    assert!(r.lambda.is_none() && r.n_eta.is_none());
    assert!(r.eta_for_n_eta(1.0).is_err());
}

#[test]
fn circuit_reduction() {
    let p = reduce_four_mode(&FourModeParams::implementation()).unwrap();
    let r = derive_rates(&p).unwrap();
    assert!((r.gamma_2 - 4.0).abs() < 1e-3);
    assert!((r.y - 0.01).abs() < 1e-4);
    let (a, b) = (20.88f64.powi(2), 19.08f64.powi(2));
    assert!((r.x - (a - b) / (a + b)).abs() < 1e-14);
    assert!((r.x - 0.0899).abs() < 1e-4);
    let dark = FourModeParams {
        lambda_1r: 0.0,
        lambda_1l: 0.0,
        lambda_2r: 0.0,
        lambda_2l: 0.0,
        ..FourModeParams::implementation()
    };
    let z = reduce_four_mode(&dark).unwrap();
    assert_eq!([z.gamma_1r, z.gamma_1l, z.gamma_2r, z.gamma_2l], [0.0; 4]);
    let bad = FourModeParams {
        kappa_r: 0.0,
        ..FourModeParams::implementation()
    };
    assert!(reduce_four_mode(&bad).is_err());
}

#[test]
fn circuit_regime_after_reduction() {
    let p = reduce_four_mode(&FourModeParams::implementation()).unwrap();
    let report = validate_regime(&p).unwrap();
    assert!(report.all_satisfied(), "{report:?}");
}

#[test]
fn reference_regime_and_blockade_scale() {
    let report = validate_regime(&TwoModeParams::fig2()).unwrap();
    assert!(report.all_satisfied(), "{report:?}");
    assert!((report.x_over_sqrt_g_gamma1 - 0.02).abs() < 1e-12);
}

#[test]
fn kerr_level_and_undriven_hamiltonian() {
    let space = make_space(&[3, 3]).unwrap();
    let quiet = TwoModeParams::fig2().with_g(0.0);
    let sys = build_two_mode_system(&quiet, &space).unwrap();
    assert_eq!(sys.hamiltonian.max_abs(), 0.0);
    let kerr = build_two_mode_system(&TwoModeParams::fig2(), &space).unwrap();
    let i = space.index(&[2, 0]);
    assert!((kerr.hamiltonian.matrix()[[i, i]] - C64::new(8e-4, 0.0)).norm() < 1e-18);
}

#[test]
fn four_mode_without_couplings_is_block_diagonal() {
    let p = FourModeParams {
        lambda_1r: 0.0,
        lambda_1l: 0.0,
        lambda_2r: 0.0,
        lambda_2l: 0.0,
        ..FourModeParams::implementation()
    };
    let space = make_space(&[3, 3, 2, 2]).unwrap();
    let sys = build_four_mode_system(&p, &space).unwrap();
    let h = sys.hamiltonian.matrix();
    for i in 0..space.total_dim() {
        for j in 0..space.total_dim() {
            let oi = space.occupations(i);
            let oj = space.occupations(j);
            if oi[2..] != oj[2..] {
                assert_eq!(h[[i, j]], C64::new(0.0, 0.0));
            }
        }
    }
    let driven = build_four_mode_system(&FourModeParams::implementation().with_eta(0.3), &space).unwrap();
    assert!(driven.hamiltonian.hermiticity_defect() < 1e-12);
}

fn params() -> impl Strategy<Value = TwoModeParams> {
    (0.0f64..2.0, 0.0f64..2.0, 0.01f64..2.0, 0.0f64..2.0, 0.0f64..0.1, 0.0f64..1.0, -1.0f64..1.0, 0.0f64..0.5).prop_map(
        |(a, b, c, d, k, g, delta, eta)| TwoModeParams {
            gamma_1r: a,
            gamma_1l: b,
            gamma_2r: c,
            gamma_2l: d,
            kappa_0: k,
            g,
            delta,
            eta,
        },
    )
}

proptest! {
    #[test]
    fn rate_identities(p in params()) {
        let r = derive_rates(&p).unwrap();
        let sum = r.gamma_1 + r.gamma_2;
        prop_assert!((r.gamma_plus + r.gamma_minus - sum).abs() <= 1e-12 * sum);
        let scale = (r.gamma_1 * r.gamma_2).max(r.gamma_12 * r.gamma_12).max(f64::MIN_POSITIVE);
        let det = r.gamma_1 * r.gamma_2 - r.gamma_12 * r.gamma_12;
        prop_assert!((r.gamma_plus * r.gamma_minus - det).abs() <= 1e-12 * scale);
        for (plus, minus, total) in [
            (r.gamma_plus_r, r.gamma_minus_r, p.gamma_1r + p.gamma_2r),
            (r.gamma_plus_l, r.gamma_minus_l, p.gamma_1l + p.gamma_2l),
        ] {
            prop_assert!((plus + minus - total).abs() <= 1e-12 * sum);
        }
        prop_assert!((0.0..=std::f64::consts::FRAC_PI_2).contains(&r.theta));
    }

    #[test]
    fn decay_matrix_eigenvalues(p in params()) {
        let r = derive_rates(&p).unwrap();
        let m = arr2(&[[r.gamma_1, r.gamma_12], [r.gamma_12, r.gamma_2]]);
        let (ev, _) = m.eigh(UPLO::Lower).unwrap();
        let scale = r.gamma_1 + r.gamma_2;
        prop_assert!((ev[0] - r.gamma_minus).abs() <= 1e-12 * scale);
        prop_assert!((ev[1] - r.gamma_plus).abs() <= 1e-12 * scale);
    }

    #[test]
    fn rotation_is_orthogonal_and_gives_canonical_modes(p in params()) {
        let r = derive_rates(&p).unwrap();
        let rot = r.rotation();
        for i in 0..2 {
            for j in 0..2 {
                let dot: f64 = (0..2).map(|k| rot[i][k] * rot[j][k]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot - want).abs() <= 1e-14);
            }
        }
        let space = make_space(&[3, 3]).unwrap();
        let a = [annihilator(&space, 0).unwrap(), annihilator(&space, 1).unwrap()];
        let modes: Vec<_> = rot
            .iter()
            .map(|row| &(&a[0] * row[0]) + &(&a[1] * row[1]))
            .collect();
        // below the truncation edge the commutators are canonical
        let low: Vec<usize> = (0..space.total_dim()).filter(|&i| space.excitations(i) <= 1).collect();
        for n in 0..2 {
            for m in 0..2 {
                let c = modes[n].commutator(&modes[m].adjoint()).unwrap().project(&low);
                for (k, row) in c.rows().into_iter().enumerate() {
                    for (l, z) in row.iter().enumerate() {
                        let want = if n == m && k == l { 1.0 } else { 0.0 };
                        prop_assert!((z - C64::new(want, 0.0)).norm() <= 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn hamiltonians_are_hermitian(p in params(), basis in prop_oneof![Just(Basis::Bare), Just(Basis::Normal)]) {
        let space = make_space(&[3, 4]).unwrap();
        let sys = build_two_mode_system_in(&p, &space, basis).unwrap();
        let scale = sys.hamiltonian.max_abs().max(1.0);
        prop_assert!(sys.hamiltonian.hermiticity_defect() <= 1e-12 * scale);
    }

    #[test]
    fn reduction_reproduces_y(l1 in 0.1f64..5.0, l1l in 0.1f64..5.0, l2 in 1.0f64..30.0, l2l in 1.0f64..30.0, kappa in 10.0f64..500.0) {
        let p4 = FourModeParams {
            lambda_1r: l1,
            lambda_1l: l1l,
            lambda_2r: l2,
            lambda_2l: l2l,
            kappa_r: kappa,
            kappa_l: kappa,
            kappa_0: 0.0,
            g: 1e-3,
            delta: 0.0,
            eta: 0.0,
        };
        let r = derive_rates(&reduce_four_mode(&p4).unwrap()).unwrap();
        let want = (l1 * l1 + l1l * l1l) / (l2 * l2 + l2l * l2l);
        prop_assert!((r.y - want).abs() <= 1e-12 * want);
    }
}
