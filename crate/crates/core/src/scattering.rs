//! Weak-drive scattering theory of the reduced model.
//!
//! To lowest order in `η` the output field is fixed by the non-Hermitian
//! `H_eff = H₀ − i Σ_n Γ_n A_n†A_n − i κ₀ Σ_j a_j†a_j` restricted to one and
//! two excitations. Both blocks are written in the normal-mode basis:
//! `(A₊, A₋)` for one excitation and `(A₊²/√2, A₊A₋, A₋²/√2)` for two.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, Inverse, Solve};
use serde::{Deserialize, Serialize};

use crate::fock::{annihilator, excitation_subspace, make_space, number_operator, HilbertSpace, Operator};
use crate::linalg::expm;
use crate::lindblad::CorrelationTrace;
use crate::model::{derive_rates, fingerprint, DerivedRates, TwoModeParams};
use crate::{Error, Result, C64};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Eigenvector matrices with a condition estimate above this are treated as
/// defective and the block exponential falls back to scaling and squaring.
const MAX_EIGVEC_COND: f64 = 1e8;

/// `H_eff` in its one- and two-excitation blocks.
#[derive(Clone, Debug)]
pub struct EffectiveHamiltonian {
    pub fingerprint: String,
    pub one: Array2<C64>,
    pub two: Array2<C64>,
}

/// Normal-mode space `(A₋, A₊)` with three levels per mode, enough for
/// every state with at most two excitations.
fn normal_space() -> HilbertSpace {
    make_space(&[3, 3]).expect("fixed dims")
}

/// `J_R` on the normal-mode space.
fn j_right(space: &HilbertSpace, rates: &DerivedRates) -> Result<Operator> {
    let a_minus = annihilator(space, 0)?;
    let a_plus = annihilator(space, 1)?;
    Ok(&(&a_plus * rates.s_plus[0]) + &(&a_minus * rates.s_minus[0]))
}

fn full_operator(p: &TwoModeParams, rates: &DerivedRates, space: &HilbertSpace) -> Result<Operator> {
    let a_minus = annihilator(space, 0)?;
    let a_plus = annihilator(space, 1)?;
    let n_minus = number_operator(space, 0)?;
    let n_plus = number_operator(space, 1)?;
    let (sin, cos) = rates.theta.sin_cos();
    let a1 = &(&a_plus * cos) + &(&a_minus * sin);
    let a1d = a1.adjoint();
    let kerr = &(&(&a1d * &a1d) * &a1) * &a1;
    let n_total = &n_minus + &n_plus;

    let hermitian = &(&n_total * p.delta) + &(&kerr * p.g);
    let loss = &(&(&n_plus * rates.gamma_plus) + &(&n_minus * rates.gamma_minus)) + &(&n_total * p.kappa_0);
    Ok(&hermitian - &(&loss * I))
}

impl EffectiveHamiltonian {
    pub fn new(p: &TwoModeParams) -> Result<Self> {
        let rates = derive_rates(p)?;
        let space = normal_space();
        let h = full_operator(p, &rates, &space)?;
        Ok(Self {
            fingerprint: fingerprint(&p.as_array(), space.dims()),
            one: h.project(&excitation_subspace(&space, 1)),
            two: h.project(&excitation_subspace(&space, 2)),
        })
    }

    pub fn block(&self, n: usize) -> Result<&Array2<C64>> {
        match n {
            1 => Ok(&self.one),
            2 => Ok(&self.two),
            _ => Err(Error::InvalidParams(format!("no effective-Hamiltonian block for n = {n}"))),
        }
    }

    /// Eigenvalues of both blocks.
    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        let mut out = self.one.eig()?.0.to_vec();
        out.extend(self.two.eig()?.0.iter());
        Ok(out)
    }
}

/// The `n`-excitation block of `H_eff` (`n` is 1 or 2).
pub fn effective_hamiltonian(p: &TwoModeParams, n: usize) -> Result<Array2<C64>> {
    Ok(EffectiveHamiltonian::new(p)?.block(n)?.clone())
}

/// Two-excitation block written out by hand: on that sector
/// `a₁†²a₁² = |φ⟩⟨φ|` with `φ = (√2 cos²θ, 2 cosθ sinθ, √2 sin²θ)`.
pub fn two_excitation_block_explicit(p: &TwoModeParams) -> Result<Array2<C64>> {
    let r = derive_rates(p)?;
    let (s, c) = r.theta.sin_cos();
    let root2 = 2f64.sqrt();
    let phi = [root2 * c * c, 2.0 * c * s, root2 * s * s];
    let loss = [
        2.0 * r.gamma_plus,
        r.gamma_plus + r.gamma_minus,
        2.0 * r.gamma_minus,
    ];
    Ok(Array2::from_shape_fn((3, 3), |(i, j)| {
        let mut v = C64::new(p.g * phi[i] * phi[j], 0.0);
        if i == j {
            v += C64::new(2.0 * p.delta, -(loss[i] + 2.0 * p.kappa_0));
        }
        v
    }))
}

fn singular(n: usize) -> Error {
    Error::SingularBlock(format!("{n}-excitation block of H_eff"))
}

/// Everything needed to evaluate `T` and `w(τ)` for one parameter set.
#[derive(Clone, Debug)]
pub struct Scattering {
    pub hamiltonian: EffectiveHamiltonian,
    /// `J_R†|0⟩` in the one-excitation basis.
    source: Array1<C64>,
    /// `J_R` from the two- to the one-excitation sector.
    lower: Array2<C64>,
    /// `G₁ J_R†|0⟩`.
    single: Array1<C64>,
    /// `J_R G₂ J_R† G₁ J_R†|0⟩`, a one-excitation vector.
    chain: Array1<C64>,
    /// `⟨0|J_R G₁ J_R†|0⟩`.
    t: C64,
    propagator: BlockPropagator,
}

impl Scattering {
    pub fn new(p: &TwoModeParams) -> Result<Self> {
        let rates = derive_rates(p)?;
        let space = normal_space();
        let hamiltonian = EffectiveHamiltonian::new(p)?;
        let j = j_right(&space, &rates)?;
        let one = excitation_subspace(&space, 1);
        let two = excitation_subspace(&space, 2);
        let vac = [0usize];

        let source = j.adjoint().block(&one, &vac).column(0).to_owned();
        let lower = j.block(&one, &two);
        let raise = j.adjoint().block(&two, &one);

        let single = hamiltonian.one.solve(&source).map_err(|_| singular(1))?;
        let t = source.iter().zip(single.iter()).map(|(a, b)| a.conj() * b).sum();
        let lifted = raise.dot(&single);
        let g2_inv = hamiltonian.two.inv().map_err(|_| singular(2))?;
        let chain = lower.dot(&g2_inv.dot(&lifted));
        if chain.iter().chain(single.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(singular(2));
        }
        let propagator = BlockPropagator::new(&hamiltonian.one)?;
        Ok(Self {
            hamiltonian,
            source,
            lower,
            single,
            chain,
            t,
            propagator,
        })
    }

    /// `T = 1 + 2i⟨0|J_R G₁ J_R†|0⟩`.
    pub fn transmission(&self) -> C64 {
        C64::new(1.0, 0.0) + 2.0 * I * self.t
    }

    /// `⟨0|J_R u⟩` for a one-excitation vector `u`.
    fn project_out(&self, u: &Array1<C64>) -> C64 {
        self.source.iter().zip(u.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    /// Two-photon wavefunction
    /// `w(τ) = T² − 4⟨0|J e^{−iH₁τ} J G₂ J† G₁ J†|0⟩ + 4⟨0|J e^{−iH₁τ} G₁ J†|0⟩⟨0|J G₁ J†|0⟩`.
    pub fn wavefunction(&self, tau: f64) -> Result<C64> {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::InvalidGrid(format!("delay {tau} must be finite and >= 0")));
        }
        let tt = self.transmission();
        let a = self.project_out(&self.propagator.apply(&self.chain, tau)?);
        let b = self.project_out(&self.propagator.apply(&self.single, tau)?);
        Ok(tt * tt - 4.0 * a + 4.0 * b * self.t)
    }

    pub fn g2(&self, tau: f64) -> Result<f64> {
        let t4 = self.transmission().norm_sqr().powi(2);
        if t4 == 0.0 {
            return Err(Error::ZeroFlux);
        }
        Ok(self.wavefunction(tau)?.norm_sqr() / t4)
    }

    /// `J_R` from two excitations to one, in the block bases.
    pub fn lowering_block(&self) -> &Array2<C64> {
        &self.lower
    }
}

/// `exp(−i H₁ τ)` on the one-excitation block.
#[derive(Clone, Debug)]
enum BlockPropagator {
    Eigen {
        values: Array1<C64>,
        vectors: Array2<C64>,
        inverse: Array2<C64>,
    },
    Dense(Array2<C64>),
}

impl BlockPropagator {
    fn new(h: &Array2<C64>) -> Result<Self> {
        if let Ok((values, vectors)) = h.eig() {
            if let Ok(inverse) = vectors.inv() {
                let norm = |m: &Array2<C64>| {
                    m.rows()
                        .into_iter()
                        .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
                        .fold(0.0, f64::max)
                };
                if norm(&vectors) * norm(&inverse) < MAX_EIGVEC_COND {
                    return Ok(Self::Eigen {
                        values,
                        vectors,
                        inverse,
                    });
                }
            }
        }
        Ok(Self::Dense(h.clone()))
    }

    fn apply(&self, v: &Array1<C64>, tau: f64) -> Result<Array1<C64>> {
        match self {
            Self::Eigen {
                values,
                vectors,
                inverse,
            } => {
                let mut c = inverse.dot(v);
                for (ci, lam) in c.iter_mut().zip(values.iter()) {
                    *ci *= (-I * lam * tau).exp();
                }
                Ok(vectors.dot(&c))
            }
            Self::Dense(h) => Ok(expm(&h.mapv(|z| -I * z * tau))?.dot(v)),
        }
    }
}

/// `T` from the inverted one-excitation block.
pub fn transmission_scattering(p: &TwoModeParams) -> Result<C64> {
    Ok(Scattering::new(p)?.transmission())
}

/// `T ≈ 1 + 2i Σ_n Γ_nR / (Δ − i(Γ_n + κ₀))`.
pub fn transmission_closed_form(p: &TwoModeParams) -> Result<C64> {
    let r = derive_rates(p)?;
    let term = |g_r: f64, g_n: f64| {
        let den = C64::new(p.delta, -(g_n + p.kappa_0));
        if den.norm() == 0.0 {
            Err(singular(1))
        } else {
            Ok(g_r / den)
        }
    };
    Ok(C64::new(1.0, 0.0)
        + 2.0 * I * (term(r.gamma_plus_r, r.gamma_plus)? + term(r.gamma_minus_r, r.gamma_minus)?))
}

/// Resonant form `T = (Λx − 1)/(Λ + 1)` of the transmission, valid to
/// first order in `x`, `y` at `Δ = 0`.
pub fn transmission_resonant(p: &TwoModeParams) -> Result<f64> {
    let r = derive_rates(p)?;
    let lambda = r
        .lambda
        .ok_or_else(|| Error::Undefined("Lambda needs Gamma_minus > 0".into()))?;
    Ok((lambda * r.x - 1.0) / (lambda + 1.0))
}

pub fn two_photon_wavefunction(p: &TwoModeParams, tau: f64) -> Result<C64> {
    Scattering::new(p)?.wavefunction(tau)
}

/// `g²(τ) ≈ |w(τ)|²/|T|⁴` on a delay grid.
pub fn g2_scattering(p: &TwoModeParams, tau_grid: &[f64]) -> Result<CorrelationTrace> {
    crate::lindblad::check_grid(tau_grid)?;
    let s = Scattering::new(p)?;
    let values = tau_grid.iter().map(|&t| s.g2(t)).collect::<Result<Vec<_>>>()?;
    CorrelationTrace::new(
        tau_grid.to_vec(),
        values,
        s.hamiltonian.fingerprint.clone(),
        "scattering".into(),
    )
}

/// How the first-order closed form for `g²(τ)` is read.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedFormReading {
    /// The bracket squared, exactly as printed.
    #[default]
    AsPrinted,
    /// Divided by its own `τ → ∞` value `((1−Λx)/(1+Λ))⁴`, so it tends to 1.
    Normalized,
}

/// `g²(τ) ≈ [((1−Λx)/(1+Λ))² − y/(1+Λ) e^{−Γ̃₊τ} − (1−2x)/(1+Λ)² e^{−Γ̃₋τ}]²`
/// with `Γ̃_n = Γ_n + κ₀`.
pub fn g2_closed_form(p: &TwoModeParams, tau: f64, reading: ClosedFormReading) -> Result<f64> {
    let r = derive_rates(p)?;
    let lambda = r
        .lambda
        .ok_or_else(|| Error::Undefined("Lambda needs Gamma_minus > 0".into()))?;
    let (x, y) = (r.x, r.y);
    let lead = ((1.0 - lambda * x) / (1.0 + lambda)).powi(2);
    let bracket = lead
        - y / (1.0 + lambda) * (-(r.gamma_plus + p.kappa_0) * tau).exp()
        - (1.0 - 2.0 * x) / (1.0 + lambda).powi(2) * (-(r.gamma_minus + p.kappa_0) * tau).exp();
    let value = bracket * bracket;
    match reading {
        ClosedFormReading::AsPrinted => Ok(value),
        ClosedFormReading::Normalized => {
            if lead == 0.0 {
                Err(Error::Undefined("closed form has no tau -> infinity limit to normalize by".into()))
            } else {
                Ok(value / (lead * lead))
            }
        }
    }
}
