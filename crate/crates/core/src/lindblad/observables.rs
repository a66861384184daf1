//! Output-field observables and two-time correlations.
//!
//! The reflected field seen by the detector is `K = η − √2 i J_R` (or its
//! circuit analogue); vacuum inputs drop out of normally ordered moments, so
//! `T = ⟨K⟩/η`, `n_out = ⟨K†K⟩` and
//! `g²(τ) = tr{K†K e^{Lτ}[K ρ̄ K†]} / ⟨K†K⟩²`.

use serde::Serialize;

use crate::fock::Operator;
use crate::linalg::propagate_many_conserving;
use crate::model::SystemOperators;
use crate::{Error, Result, C64};

use super::liouvillian::{trace_conservation, unvectorize, vectorize, Liouvillian};
use super::state::DensityMatrix;
use super::steady::steady_state;

/// `g²` sampled on a delay grid starting at zero.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationTrace {
    pub tau_grid: Vec<f64>,
    pub g2_values: Vec<f64>,
    pub fingerprint: String,
    /// Series name used by the emitters (e.g. `N_eta=1` or `scattering`).
    pub label: String,
}

impl CorrelationTrace {
    pub fn new(tau_grid: Vec<f64>, g2_values: Vec<f64>, fingerprint: String, label: String) -> Result<Self> {
        if tau_grid.len() != g2_values.len() {
            return Err(Error::InvalidGrid(format!(
                "{} delays but {} values",
                tau_grid.len(),
                g2_values.len()
            )));
        }
        check_grid(&tau_grid)?;
        Ok(Self {
            tau_grid,
            g2_values,
            fingerprint,
            label,
        })
    }

    pub fn len(&self) -> usize {
        self.tau_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau_grid.is_empty()
    }

    /// Copy with every delay multiplied by `factor` (e.g. `Γ₋` for Γ₋τ axes).
    pub fn scaled_delays(&self, factor: f64) -> Self {
        Self {
            tau_grid: self.tau_grid.iter().map(|t| t * factor).collect(),
            ..self.clone()
        }
    }
}

/// Delays must start at zero and increase strictly.
pub fn check_grid(tau: &[f64]) -> Result<()> {
    match tau.first() {
        None => return Err(Error::InvalidGrid("empty delay grid".into())),
        Some(&t0) if t0 != 0.0 => {
            return Err(Error::InvalidGrid(format!("delay grid starts at {t0}, not 0")))
        }
        _ => {}
    }
    if tau.iter().any(|t| !t.is_finite()) || tau.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("delays must be finite and strictly increasing".into()));
    }
    Ok(())
}

fn expect(op: &Operator, rho: &DensityMatrix) -> C64 {
    op.expectation(rho.matrix())
}

/// `T = ⟨K⟩/η`; for the reduced model `1 − √2 i ⟨J_R⟩/η`.
pub fn transmission_from_state(sys: &SystemOperators, rho: &DensityMatrix) -> Result<C64> {
    if sys.eta <= 0.0 {
        return Err(Error::Undefined("transmission needs eta > 0".into()));
    }
    Ok(expect(&sys.output, rho) / sys.eta)
}

pub fn transmission_numeric(sys: &SystemOperators, l: &Liouvillian) -> Result<C64> {
    transmission_from_state(sys, &steady_state(l)?)
}

/// `⟨K†K⟩`.
pub fn output_flux(sys: &SystemOperators, rho: &DensityMatrix) -> f64 {
    let k = &sys.output;
    expect(&k.adjoint().compose(k).expect("same space"), rho).re
}

/// Rate `2⟨J†J⟩` at which quanta leave through each jump operator.
pub fn jump_fluxes(sys: &SystemOperators, rho: &DensityMatrix) -> Vec<f64> {
    sys.jumps
        .iter()
        .map(|j| 2.0 * expect(&j.op.adjoint().compose(&j.op).expect("same space"), rho).re)
        .collect()
}

/// `⟨K†K†KK⟩ / ⟨K†K⟩²` from the steady state alone.
pub fn g2_zero_direct(sys: &SystemOperators, rho: &DensityMatrix) -> Result<f64> {
    let n = output_flux(sys, rho);
    if !(n > 0.0) {
        return Err(Error::ZeroFlux);
    }
    let kk = sys.output.compose(&sys.output)?;
    let moment = expect(&kk.adjoint().compose(&kk)?, rho).re;
    Ok(moment / (n * n))
}

/// Steady-state summary at one drive point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SteadyObservables {
    pub transmission: C64,
    pub flux: f64,
    pub g2_zero: f64,
    /// Largest population on a truncation edge.
    pub edge_population: f64,
}

pub fn observe(sys: &SystemOperators, rho: &DensityMatrix) -> Result<SteadyObservables> {
    Ok(SteadyObservables {
        transmission: transmission_from_state(sys, rho)?,
        flux: output_flux(sys, rho),
        g2_zero: g2_zero_direct(sys, rho)?,
        edge_population: rho.edge_population(),
    })
}

/// `g²(τ)` on `tau_grid` by the quantum regression theorem, given the
/// steady state.
pub fn g2_regression_from_state(
    sys: &SystemOperators,
    l: &Liouvillian,
    rho: &DensityMatrix,
    tau_grid: &[f64],
) -> Result<CorrelationTrace> {
    check_grid(tau_grid)?;
    let dense = l.dense().ok_or(Error::TooLarge {
        dim: l.dim(),
        limit: super::liouvillian::DENSE_LIMIT,
    })?;
    let k = sys.output.matrix();
    let kd = k.t().mapv(|z| z.conj());
    let n = output_flux(sys, rho);
    if !(n > 0.0) {
        return Err(Error::ZeroFlux);
    }
    let conditioned = k.dot(rho.matrix()).dot(&kd);
    let d = sys.space.total_dim();
    let conserved = trace_conservation(d);
    let moved = propagate_many_conserving(dense, &vectorize(&conditioned), tau_grid, Some(&conserved))?;
    let kdk = kd.dot(k);
    let values = moved
        .iter()
        .map(|v| {
            let y = unvectorize(v, d);
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..d {
                for j in 0..d {
                    acc += kdk[[i, j]] * y[[j, i]];
                }
            }
            // round-off can leave a value a hair below zero
            (acc.re / (n * n)).max(0.0)
        })
        .collect();
    CorrelationTrace::new(tau_grid.to_vec(), values, sys.fingerprint.clone(), String::new())
}

pub fn g2_regression(sys: &SystemOperators, l: &Liouvillian, tau_grid: &[f64]) -> Result<CorrelationTrace> {
    let rho = steady_state(l)?;
    g2_regression_from_state(sys, l, &rho, tau_grid)
}

/// Smallest delay with `g²(τ̃) = 1/e`, linearly interpolated between the
/// bracketing grid points. `None` when the trace starts at or above `1/e`
/// or never reaches it.
pub fn antibunching_time(trace: &CorrelationTrace) -> Option<f64> {
    let level = (-1.0f64).exp();
    let g = &trace.g2_values;
    let t = &trace.tau_grid;
    if g.is_empty() || g[0] >= level {
        return None;
    }
    (1..g.len()).find(|&k| g[k] >= level).map(|k| {
        let (g0, g1) = (g[k - 1], g[k]);
        let frac = (level - g0) / (g1 - g0);
        t[k - 1] + frac * (t[k] - t[k - 1])
    })
}

/// Delays for `g²(τ)`: `points` values over `[0, tau_max]`, the first part
/// log-spaced from `tau_max·10⁻⁴` up to `tau_max/8`, then linear.
pub fn default_tau_grid(tau_max: f64, points: usize) -> Result<Vec<f64>> {
    if !(tau_max > 0.0 && tau_max.is_finite()) || points < 4 {
        return Err(Error::InvalidGrid(format!(
            "need tau_max > 0 and at least 4 points (got {tau_max}, {points})"
        )));
    }
    let n_log = (points - 1) / 2;
    let n_lin = points - 1 - n_log;
    let lo = tau_max * 1e-4;
    let knee = tau_max / 8.0;
    let mut grid = Vec::with_capacity(points);
    grid.push(0.0);
    for k in 0..n_log {
        let f = k as f64 / n_log as f64;
        grid.push(lo * (knee / lo).powf(f));
    }
    for k in 0..n_lin {
        let f = (k + 1) as f64 / n_lin as f64;
        grid.push(knee + (tau_max - knee) * f);
    }
    Ok(grid)
}

/// Linear grid `[0, tau_max]` with `points` entries.
pub fn linear_tau_grid(tau_max: f64, points: usize) -> Result<Vec<f64>> {
    if !(tau_max > 0.0 && tau_max.is_finite()) || points < 2 {
        return Err(Error::InvalidGrid(format!(
            "need tau_max > 0 and at least 2 points (got {tau_max}, {points})"
        )));
    }
    Ok((0..points)
        .map(|k| tau_max * k as f64 / (points - 1) as f64)
        .collect())
}
