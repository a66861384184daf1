//! Invariant suite run by the `selftest` subcommand.
//!
//! Each check reports the worst value it saw next to its tolerance. The
//! parameter points are the shipped ones: the reference set across the default
//! drive grid, the circuit scenario and its Markov scales.

use serde::Serialize;

use crate::experiments::{default_n_eta_grid, model_equivalence, solve_two_mode, SolverSettings, SCENARIO_N_ETA};
use crate::fock::make_space;
use crate::lindblad::{
    build_liouvillian, build_liouvillian_as, default_tau_grid, evolve_many, g2_regression, relative_residual,
    steady_state, DensityMatrix, Liouvillian, StorageKind,
};
use crate::model::{
    build_four_mode_system, build_two_mode_system_in, derive_rates, reduce_four_mode, Basis, FourModeParams,
    TwoModeParams,
};
use crate::par::{self, Workers};
use crate::Result;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub value: f64,
    pub tolerance: f64,
}

impl Check {
    fn at_most(name: &'static str, value: f64, tolerance: f64) -> Self {
        Self {
            name,
            passed: value <= tolerance,
            value,
            tolerance,
        }
    }

    fn below(name: &'static str, value: f64, tolerance: f64) -> Self {
        Self {
            name,
            passed: value < tolerance,
            value,
            tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelfTestReport {
    pub checks: Vec<Check>,
}

impl SelfTestReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn fig2_generator(n_eta: f64, d: usize, basis: Basis) -> Result<(crate::model::SystemOperators, Liouvillian)> {
    let p = TwoModeParams::fig2().with_n_eta(n_eta)?;
    let sys = build_two_mode_system_in(&p, &make_space(&[d, d])?, basis)?;
    let l = build_liouvillian(&sys)?;
    Ok((sys, l))
}

fn trace_along_evolution() -> Result<Check> {
    let (sys, l) = fig2_generator(1.0, 4, Basis::Normal)?;
    let gm = derive_rates(&TwoModeParams::fig2())?.gamma_minus;
    let times = [1.0, 1.0 / gm, 8.0 / gm, 60.0 / gm];
    let states = evolve_many(&l, &DensityMatrix::vacuum(&sys.space), &times)?;
    let worst = states
        .iter()
        .map(|r| (r.trace().re - 1.0).abs().max(r.trace().im.abs()))
        .fold(0.0, f64::max);
    Ok(Check::at_most("trace preserved along evolution", worst, 1e-9))
}

fn residuals_and_null_vectors() -> Result<[Check; 2]> {
    let mut generators = Vec::new();
    for basis in [Basis::Bare, Basis::Normal] {
        generators.push(fig2_generator(1.0, 5, basis)?.1);
    }
    let lossy = TwoModeParams::fig2().with_kappa_0(1e-8).with_n_eta(0.1)?;
    generators.push(build_liouvillian(&build_two_mode_system_in(
        &lossy,
        &make_space(&[5, 5])?,
        Basis::Normal,
    )?)?);
    let scenario = reduce_four_mode(&FourModeParams::implementation())?.with_n_eta(SCENARIO_N_ETA)?;
    generators.push(build_liouvillian(&build_two_mode_system_in(
        &scenario,
        &make_space(&[5, 5])?,
        Basis::Normal,
    )?)?);
    let circuit = FourModeParams::implementation().with_eta(scenario.eta);
    let four = build_four_mode_system(&circuit, &make_space(&[3, 3, 2, 2])?)?;
    generators.push(build_liouvillian_as(&four, StorageKind::Sparse)?);

    let mut residual: f64 = 0.0;
    let mut defect: f64 = 0.0;
    for l in &generators {
        defect = defect.max(l.trace_defect());
        residual = residual.max(relative_residual(l, &steady_state(l)?));
    }
    Ok([
        Check::at_most("steady-state residual", residual, 1e-10),
        Check::at_most("vec(I) is a left null vector", defect, 1e-10),
    ])
}

fn linear_coherence() -> Result<Check> {
    let p = TwoModeParams::fig2().with_g(0.0).with_n_eta(1e-3)?;
    let sys = build_two_mode_system_in(&p, &make_space(&[5, 5])?, Basis::Normal)?;
    let l = build_liouvillian(&sys)?;
    let gm = derive_rates(&p)?.gamma_minus;
    let trace = g2_regression(&sys, &l, &default_tau_grid(8.0 / gm, 24)?)?;
    let worst = trace.g2_values.iter().map(|g| (g - 1.0).abs()).fold(0.0, f64::max);
    Ok(Check::at_most("g2 = 1 without Kerr", worst, 1e-6))
}

/// Sample couplings spanning symmetric, near-dark and strongly asymmetric
/// cases.
fn rate_samples() -> Vec<TwoModeParams> {
    let values = [0.0, 1e-3, 0.02, 0.3, 1.0, 2.5];
    let mut out = vec![TwoModeParams::fig2(), reduce_four_mode(&FourModeParams::implementation()).expect("valid")];
    for &a in &values {
        for &b in &values {
            for &c in &values[1..] {
                for &d in &values[1..] {
                    out.push(TwoModeParams {
                        gamma_1r: a,
                        gamma_1l: b,
                        gamma_2r: c,
                        gamma_2l: d,
                        kappa_0: 0.0,
                        g: 0.0,
                        delta: 0.0,
                        eta: 0.0,
                    });
                }
            }
        }
    }
    out
}

fn rate_identities() -> Result<[Check; 2]> {
    let mut sum: f64 = 0.0;
    let mut product: f64 = 0.0;
    for p in rate_samples() {
        let r = derive_rates(&p)?;
        let total = r.gamma_1 + r.gamma_2;
        sum = sum.max((r.gamma_plus + r.gamma_minus - total).abs() / total);
        // relative to the size of the terms that cancel in the determinant
        let scale = (r.gamma_1 * r.gamma_2).max(r.gamma_12 * r.gamma_12);
        if scale > 0.0 {
            let det = r.gamma_1 * r.gamma_2 - r.gamma_12 * r.gamma_12;
            product = product.max((r.gamma_plus * r.gamma_minus - det).abs() / scale);
        }
    }
    Ok([
        Check::at_most("Gamma_plus + Gamma_minus = gamma_1 + gamma_2", sum, 1e-12),
        Check::at_most("Gamma_plus Gamma_minus = gamma_1 gamma_2 - gamma_12^2", product, 1e-12),
    ])
}

fn truncation_convergence(settings: &SolverSettings, workers: Workers) -> Result<Check> {
    let settings = SolverSettings {
        check_convergence: true,
        ..settings.clone()
    };
    let mut points: Vec<TwoModeParams> = vec![1e-3]
        .into_iter()
        .chain(default_n_eta_grid())
        .map(|n| TwoModeParams::fig2().with_n_eta(n))
        .collect::<Result<_>>()?;
    points.push(reduce_four_mode(&FourModeParams::implementation())?.with_n_eta(SCENARIO_N_ETA)?);
    let solved = par::try_map(&points, workers, |p| solve_two_mode(p, &settings))?;
    let mut worst: f64 = 0.0;
    let mut all = true;
    for s in &solved {
        all &= s.convergence.converged;
        worst = worst.max(s.convergence.g2_change.unwrap_or(f64::INFINITY));
    }
    let equivalence = model_equivalence(&FourModeParams::implementation(), &[1.0, 4.0], SCENARIO_N_ETA, &settings, workers)?;
    for p in &equivalence.points {
        all &= p.converged;
        worst = worst.max(p.g2_change);
    }
    let mut check = Check::below("truncation change of g2(0) at shipped points", worst, settings.convergence_tolerance);
    check.passed &= all;
    Ok(check)
}

/// Runs every check; numerical failures inside a check propagate as errors.
pub fn run(settings: &SolverSettings, workers: Workers) -> Result<SelfTestReport> {
    let mut checks = vec![trace_along_evolution()?];
    checks.extend(residuals_and_null_vectors()?);
    checks.push(linear_coherence()?);
    checks.extend(rate_identities()?);
    checks.push(truncation_convergence(settings, workers)?);
    Ok(SelfTestReport { checks })
}
