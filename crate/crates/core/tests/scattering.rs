use blockade::fock::make_space;
use blockade::lindblad::{build_liouvillian, default_tau_grid, g2_regression, linear_tau_grid};
use blockade::model::{build_two_mode_system_in, derive_rates, Basis, TwoModeParams};
use blockade::scattering::{
    effective_hamiltonian, g2_closed_form, g2_scattering, transmission_closed_form, transmission_resonant,
    transmission_scattering, two_excitation_block_explicit, two_photon_wavefunction, ClosedFormReading,
    EffectiveHamiltonian, Scattering,
};
use blockade::C64;
use proptest::prelude::*;

fn close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol
}

#[test]
fn one_excitation_block_without_kerr_is_diagonal() {
    let p = TwoModeParams::fig2().with_g(0.0).with_delta(0.3).with_kappa_0(0.02);
    let r = derive_rates(&p).unwrap();
    let h = effective_hamiltonian(&p, 1).unwrap();
    assert!(close(h[[0, 0]], C64::new(0.3, -(r.gamma_plus + 0.02)), 1e-15));
    assert!(close(h[[1, 1]], C64::new(0.3, -(r.gamma_minus + 0.02)), 1e-15));
    assert_eq!(h[[0, 1]], C64::new(0.0, 0.0));
    assert_eq!(h[[1, 0]], C64::new(0.0, 0.0));
}

#[test]
fn kerr_shift_lands_on_dark_pair_when_mode_one_is_dark() {
    // γ₁₂ = 0 with γ₁ < γ₂ puts θ at π/2, so A₋ = a₁
    let p = TwoModeParams {
        gamma_1r: 0.0,
        gamma_1l: 0.2,
        gamma_2r: 0.5,
        gamma_2l: 0.0,
        kappa_0: 0.0,
        g: 0.7,
        delta: 0.0,
        eta: 0.0,
    };
    let r = derive_rates(&p).unwrap();
    assert!((r.theta - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    let h = effective_hamiltonian(&p, 2).unwrap();
    assert!((h[[2, 2]].re - 2.0 * 0.7).abs() < 1e-14);
    assert!(h[[0, 0]].re.abs() < 1e-14);
    assert!(h[[1, 1]].re.abs() < 1e-14);
}

#[test]
fn resonant_lossless_transmission_is_minus_one() {
    let t = transmission_scattering(&TwoModeParams::fig2()).unwrap();
    // first order in x and y; the neglected terms are O(xy)
    assert!(close(t, C64::new(-1.0, 0.0), 1e-4), "{t}");
    assert_eq!(transmission_resonant(&TwoModeParams::fig2()).unwrap(), -1.0);
}

#[test]
fn lossy_transmission_follows_resonant_form() {
    let p = TwoModeParams::fig2();
    let r = derive_rates(&p).unwrap();
    // the resonant form drops O(x, y) corrections
    let budget = 2.0 * (r.x.abs() + r.y);
    for lambda in [0.3, 1.0, 4.0] {
        let q = p.with_kappa_0(lambda * r.gamma_minus);
        let t = transmission_scattering(&q).unwrap();
        let want = transmission_resonant(&q).unwrap();
        assert!((t.re - want).abs() < budget, "Λ = {lambda}: {t} vs {want}");
        assert!(t.im.abs() < 1e-3);
    }
    let q = p.with_kappa_0(r.gamma_minus);
    let t = transmission_scattering(&q).unwrap();
    assert!((t.re - (r.x - 1.0) / 2.0).abs() < 2e-2 * (1.0 - r.x) / 2.0);
}

#[test]
fn wavefunction_without_kerr_is_t_squared() {
    let p = TwoModeParams::from_asymmetry(1.0, 0.1, 0.2, 0.0).with_delta(0.05).with_kappa_0(0.01);
    let s = Scattering::new(&p).unwrap();
    let t = s.transmission();
    for tau in [0.0, 0.2, 1.0, 10.0] {
        assert!(close(s.wavefunction(tau).unwrap(), t * t, 1e-13));
    }
    let trace = g2_scattering(&p, &linear_tau_grid(10.0, 11).unwrap()).unwrap();
    assert!(trace.g2_values.iter().all(|g| (g - 1.0).abs() < 1e-12));
}

#[test]
fn wavefunction_relaxes_to_t_squared() {
    let p = TwoModeParams::fig2();
    let gm = derive_rates(&p).unwrap().gamma_minus;
    let t = transmission_scattering(&p).unwrap();
    let late = two_photon_wavefunction(&p, 60.0 / gm).unwrap();
    assert!(close(late, t * t, 1e-10));
}

#[test]
fn closed_form_blockade_at_zero_delay() {
    let p = TwoModeParams::fig2();
    let g0 = g2_closed_form(&p, 0.0, ClosedFormReading::AsPrinted).unwrap();
    let (x, y) = (0.004, 0.01);
    assert!((g0 - (2.0 * x - y) * (2.0 * x - y)).abs() < 1e-12);
    assert!((g0 - 4e-6).abs() < 1e-12);
    let n = g2_closed_form(&p, 0.0, ClosedFormReading::Normalized).unwrap();
    assert!((n - g0).abs() < 1e-18);
}

#[test]
fn normalized_closed_form_tends_to_one() {
    let p = TwoModeParams::fig2();
    let gm = derive_rates(&p).unwrap().gamma_minus;
    let q = p.with_kappa_0(0.5 * gm);
    let late = g2_closed_form(&q, 80.0 / gm, ClosedFormReading::Normalized).unwrap();
    assert!((late - 1.0).abs() < 1e-12);
    let printed = g2_closed_form(&q, 80.0 / gm, ClosedFormReading::AsPrinted).unwrap();
    let lambda_x = 0.5 * derive_rates(&q).unwrap().x;
    assert!((printed - ((1.0 - lambda_x) / 1.5).powi(4)).abs() < 1e-12);
}

#[test]
fn scattering_tracks_closed_form_for_small_asymmetry() {
    let p = TwoModeParams::from_asymmetry(1.0, 1e-3, 2e-3, 4e-4);
    let r = derive_rates(&p).unwrap();
    let grid = linear_tau_grid(8.0 / r.gamma_minus, 41).unwrap();
    let trace = g2_scattering(&p, &grid).unwrap();
    for (tau, g) in grid.iter().zip(&trace.g2_values) {
        let cf = g2_closed_form(&p, *tau, ClosedFormReading::AsPrinted).unwrap();
        // relative where the curve is O(1), absolute near the dip
        assert!((g - cf).abs() <= 1e-2 * cf.max(1e-4), "Γ₋τ = {}: {g} vs {cf}", tau * r.gamma_minus);
    }
}

#[test]
fn scattering_matches_master_equation_at_vanishing_drive() {
    let p = TwoModeParams::fig2().with_n_eta(1e-3).unwrap();
    let gm = derive_rates(&p).unwrap().gamma_minus;
    let grid = default_tau_grid(8.0 / gm, 40).unwrap();
    let sys = build_two_mode_system_in(&p, &make_space(&[5, 5]).unwrap(), Basis::Normal).unwrap();
    let l = build_liouvillian(&sys).unwrap();
    let me = g2_regression(&sys, &l, &grid).unwrap();
    let sc = g2_scattering(&p, &grid).unwrap();
    for ((tau, a), b) in grid.iter().zip(&me.g2_values).zip(&sc.g2_values) {
        assert!((a - b).abs() <= 2e-2 * b, "Γ₋τ = {}: {a} vs {b}", tau * gm);
    }
}

fn params() -> impl Strategy<Value = TwoModeParams> {
    (
        0.01f64..1.0,
        0.01f64..1.0,
        0.05f64..2.0,
        0.05f64..2.0,
        0.0f64..0.3,
        0.0f64..2.0,
        -1.0f64..1.0,
    )
        .prop_map(|(a, b, c, d, k, g, delta)| TwoModeParams {
            gamma_1r: a,
            gamma_1l: b,
            gamma_2r: c,
            gamma_2l: d,
            kappa_0: k,
            g,
            delta,
            eta: 0.0,
        })
}

proptest! {
    #[test]
    fn transmission_formulas_agree(p in params()) {
        let a = transmission_scattering(&p).unwrap();
        let b = transmission_closed_form(&p).unwrap();
        prop_assert!(close(a, b, 1e-12), "{} vs {}", a, b);
    }

    #[test]
    fn two_excitation_constructions_agree(p in params()) {
        let a = effective_hamiltonian(&p, 2).unwrap();
        let b = two_excitation_block_explicit(&p).unwrap();
        let scale = a.iter().map(|z| z.norm()).fold(1.0, f64::max);
        for (x, y) in a.iter().zip(b.iter()) {
            prop_assert!(close(*x, *y, 1e-12 * scale));
        }
    }

    #[test]
    fn effective_spectrum_decays(p in params()) {
        let h = EffectiveHamiltonian::new(&p).unwrap();
        for z in h.eigenvalues().unwrap() {
            prop_assert!(z.im <= 1e-14);
        }
    }

    #[test]
    fn g2_relaxes_to_one(p in params()) {
        let r = derive_rates(&p).unwrap();
        let slow = r.gamma_minus + p.kappa_0;
        prop_assume!(slow > 1e-3);
        let s = Scattering::new(&p).unwrap();
        prop_assume!(s.transmission().norm() > 1e-3);
        let g = s.g2(80.0 / slow).unwrap();
        prop_assert!((g - 1.0).abs() < 1e-8, "{}", g);
    }
}
