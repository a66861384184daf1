use crate::linalg::propagate_many_conserving;
use crate::{Error, Result};

use super::liouvillian::{trace_conservation, Liouvillian, DENSE_LIMIT};
use super::state::DensityMatrix;

/// `ρ(t) = exp(Lt) ρ₀`, computed with a dense Padé exponential.
pub fn evolve(l: &Liouvillian, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    Ok(evolve_many(l, rho0, &[t])?.remove(0))
}

/// `exp(L t_k) ρ₀` for every `t_k`, sharing the exponential ladder.
pub fn evolve_many(l: &Liouvillian, rho0: &DensityMatrix, times: &[f64]) -> Result<Vec<DensityMatrix>> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite("evolution time".into()));
    }
    if times.iter().any(|&t| t < 0.0) {
        return Err(Error::InvalidGrid("evolution times must be >= 0".into()));
    }
    if rho0.space() != l.space() {
        return Err(Error::SpaceMismatch {
            left: l.space().dims().to_vec(),
            right: rho0.space().dims().to_vec(),
        });
    }
    let dense = l.dense().ok_or(Error::TooLarge {
        dim: l.dim(),
        limit: DENSE_LIMIT,
    })?;
    let conserved = trace_conservation(l.space().total_dim());
    propagate_many_conserving(dense, &rho0.to_vec(), times, Some(&conserved))?
        .iter()
        .map(|v| DensityMatrix::from_vec(l.space(), v))
        .collect()
}
