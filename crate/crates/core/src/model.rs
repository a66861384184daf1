//! Physical parameters, derived rates and the operator content of the two
//! master equations.
//!
//! The reduced model has two Kerr-coupled modes decaying collectively into
//! the environments `R` and `L`:
//!
//! ```text
//! H   = Δ(n₁ + n₂) + g a₁†² a₁² + √2 η (J_R + J_R†)
//! J_α = √γ_1α a₁ + √γ_2α a₂,     plus local decay √κ₀ a_j
//! ```
//!
//! The implementation model replaces the engineered environments with two
//! lossy auxiliary resonators `b_R`, `b_L` (decay `κ_α`) exchanging
//! excitations with `a_j` at rates `λ_jα`; eliminating them gives
//! `γ_jα = λ_jα²/κ_α`.
//!
//! Every jump operator enters the dissipator as `2JρJ† − J†Jρ − ρJ†J`.

use serde::{Deserialize, Serialize};

use crate::fock::{annihilator, number_operator, HilbertSpace, Operator};
use crate::{Error, Result, C64};

/// Rates and drive of the reduced two-mode model, in one consistent unit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoModeParams {
    #[serde(rename = "gamma_1R")]
    pub gamma_1r: f64,
    #[serde(rename = "gamma_1L")]
    pub gamma_1l: f64,
    #[serde(rename = "gamma_2R")]
    pub gamma_2r: f64,
    #[serde(rename = "gamma_2L")]
    pub gamma_2l: f64,
    #[serde(default)]
    pub kappa_0: f64,
    pub g: f64,
    #[serde(default, rename = "Delta")]
    pub delta: f64,
    #[serde(default)]
    pub eta: f64,
}

impl TwoModeParams {
    /// Rates from the asymmetry `x`, the ratio `y` and `γ₂`, with mode 1
    /// coupled symmetrically (`γ_1R = γ_1L`).
    pub fn from_asymmetry(gamma_2: f64, x: f64, y: f64, g: f64) -> Self {
        let gamma_1 = y * gamma_2;
        Self {
            gamma_1r: gamma_1 / 2.0,
            gamma_1l: gamma_1 / 2.0,
            gamma_2r: gamma_2 * (1.0 + x) / 2.0,
            gamma_2l: gamma_2 * (1.0 - x) / 2.0,
            kappa_0: 0.0,
            g,
            delta: 0.0,
            eta: 0.0,
        }
    }

    /// The reference operating point: `γ₂ = 1`, `y = 0.01`,
    /// `x = 0.004`, `g = 4·10⁻⁴`, no local loss, resonant, undriven.
    pub fn fig2() -> Self {
        Self::from_asymmetry(1.0, 0.004, 0.01, 4e-4)
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_kappa_0(mut self, kappa_0: f64) -> Self {
        self.kappa_0 = kappa_0;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_g(mut self, g: f64) -> Self {
        self.g = g;
        self
    }

    /// Sets `η` so that the normalized drive `N_η = 2Γ₋R η²/Γ₋²` takes the
    /// requested value.
    pub fn with_n_eta(self, n_eta: f64) -> Result<Self> {
        let eta = derive_rates(&self)?.eta_for_n_eta(n_eta)?;
        Ok(self.with_eta(eta))
    }

    /// Expresses every rate in units of `unit` (so `γ₂ → γ₂/unit`); the
    /// drive amplitude carries the square root of a rate.
    pub fn rescaled(&self, unit: f64) -> Self {
        Self {
            gamma_1r: self.gamma_1r / unit,
            gamma_1l: self.gamma_1l / unit,
            gamma_2r: self.gamma_2r / unit,
            gamma_2l: self.gamma_2l / unit,
            kappa_0: self.kappa_0 / unit,
            g: self.g / unit,
            delta: self.delta / unit,
            eta: self.eta / unit.sqrt(),
        }
    }

    /// Copy in units of `γ₂`, together with the value of `γ₂` it was divided by.
    pub fn normalized(&self) -> Result<(Self, f64)> {
        let gamma_2 = self.gamma_2r + self.gamma_2l;
        if gamma_2 <= 0.0 {
            return Err(Error::InvalidParams(
                "gamma_2 = 0 leaves no unit to normalize by".into(),
            ));
        }
        Ok((self.rescaled(gamma_2), gamma_2))
    }

    pub fn as_array(&self) -> [f64; 8] {
        [
            self.gamma_1r,
            self.gamma_1l,
            self.gamma_2r,
            self.gamma_2l,
            self.kappa_0,
            self.g,
            self.delta,
            self.eta,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("gamma_1R", self.gamma_1r),
            ("gamma_1L", self.gamma_1l),
            ("gamma_2R", self.gamma_2r),
            ("gamma_2L", self.gamma_2l),
            ("kappa_0", self.kappa_0),
            ("g", self.g),
            ("eta", self.eta),
        ];
        for (name, v) in fields {
            check_rate(name, v)?;
        }
        if !self.delta.is_finite() {
            return Err(Error::NonFinite("Delta".into()));
        }
        Ok(())
    }
}

fn check_rate(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::NonFinite(name.into()));
    }
    if v < 0.0 {
        return Err(Error::InvalidParams(format!("{name} = {v} is negative")));
    }
    Ok(())
}

/// Couplings of the four-mode circuit model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourModeParams {
    #[serde(rename = "lambda_1R")]
    pub lambda_1r: f64,
    #[serde(rename = "lambda_1L")]
    pub lambda_1l: f64,
    #[serde(rename = "lambda_2R")]
    pub lambda_2r: f64,
    #[serde(rename = "lambda_2L")]
    pub lambda_2l: f64,
    #[serde(rename = "kappa_R")]
    pub kappa_r: f64,
    #[serde(rename = "kappa_L")]
    pub kappa_l: f64,
    #[serde(default)]
    pub kappa_0: f64,
    pub g: f64,
    #[serde(default, rename = "Delta")]
    pub delta: f64,
    #[serde(default)]
    pub eta: f64,
}

impl FourModeParams {
    /// Superconducting-circuit numbers in MHz: `κ_α = 200`, `λ_1α = 2`,
    /// `λ_2R = 20.88`, `λ_2L = 19.08`, `κ₀ = 40 Hz` and `g = 1 kHz`.
    ///
    /// The Kerr rate is an assumed value within the reachable kHz range.
    pub fn implementation() -> Self {
        Self {
            lambda_1r: 2.0,
            lambda_1l: 2.0,
            lambda_2r: 20.88,
            lambda_2l: 19.08,
            kappa_r: 200.0,
            kappa_l: 200.0,
            kappa_0: 40e-6,
            g: 1e-3,
            delta: 0.0,
            eta: 0.0,
        }
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    /// Moves deeper into the Markov limit: `κ_α → sκ_α`, `λ_jα → √s λ_jα`,
    /// so every `γ_jα` is unchanged and `κ/λ` grows by `√s`.
    pub fn markov_scaled(&self, s: f64) -> Self {
        let r = s.sqrt();
        Self {
            lambda_1r: self.lambda_1r * r,
            lambda_1l: self.lambda_1l * r,
            lambda_2r: self.lambda_2r * r,
            lambda_2l: self.lambda_2l * r,
            kappa_r: self.kappa_r * s,
            kappa_l: self.kappa_l * s,
            ..*self
        }
    }

    pub fn rescaled(&self, unit: f64) -> Self {
        let r = unit.sqrt();
        Self {
            lambda_1r: self.lambda_1r / unit,
            lambda_1l: self.lambda_1l / unit,
            lambda_2r: self.lambda_2r / unit,
            lambda_2l: self.lambda_2l / unit,
            kappa_r: self.kappa_r / unit,
            kappa_l: self.kappa_l / unit,
            kappa_0: self.kappa_0 / unit,
            g: self.g / unit,
            delta: self.delta / unit,
            eta: self.eta / r,
        }
    }

    /// Smallest and largest `κ_α/λ_jα` over the nonzero couplings.
    pub fn kappa_over_lambda(&self) -> (f64, f64) {
        let pairs = [
            (self.kappa_r, self.lambda_1r),
            (self.kappa_l, self.lambda_1l),
            (self.kappa_r, self.lambda_2r),
            (self.kappa_l, self.lambda_2l),
        ];
        pairs
            .iter()
            .filter(|(_, l)| *l > 0.0)
            .map(|(k, l)| k / l)
            .fold((f64::INFINITY, 0.0), |(lo, hi), r| (lo.min(r), hi.max(r)))
    }

    pub fn as_array(&self) -> [f64; 10] {
        [
            self.lambda_1r,
            self.lambda_1l,
            self.lambda_2r,
            self.lambda_2l,
            self.kappa_r,
            self.kappa_l,
            self.kappa_0,
            self.g,
            self.delta,
            self.eta,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("lambda_1R", self.lambda_1r),
            ("lambda_1L", self.lambda_1l),
            ("lambda_2R", self.lambda_2r),
            ("lambda_2L", self.lambda_2l),
            ("kappa_R", self.kappa_r),
            ("kappa_L", self.kappa_l),
            ("kappa_0", self.kappa_0),
            ("g", self.g),
            ("eta", self.eta),
        ];
        for (name, v) in fields {
            check_rate(name, v)?;
        }
        if self.kappa_r == 0.0 || self.kappa_l == 0.0 {
            return Err(Error::InvalidParams(
                "auxiliary decay rates kappa_R, kappa_L must be positive".into(),
            ));
        }
        if !self.delta.is_finite() {
            return Err(Error::NonFinite("Delta".into()));
        }
        Ok(())
    }
}

/// Secondary rates of the reduced model, computed without small-`x`, `y`
/// expansions.
///
/// The normal modes are `A₊ = cosθ a₁ + sinθ a₂`, `A₋ = sinθ a₁ − cosθ a₂`;
/// `s_plus[α]`, `s_minus[α]` are the signed amplitudes of `J_α` on them, so
/// `Γ_nα = s_nα²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DerivedRates {
    pub gamma_1: f64,
    pub gamma_2: f64,
    pub gamma_12: f64,
    pub theta: f64,
    #[serde(rename = "Gamma_plus")]
    pub gamma_plus: f64,
    #[serde(rename = "Gamma_minus")]
    pub gamma_minus: f64,
    #[serde(rename = "Gamma_plus_R")]
    pub gamma_plus_r: f64,
    #[serde(rename = "Gamma_plus_L")]
    pub gamma_plus_l: f64,
    #[serde(rename = "Gamma_minus_R")]
    pub gamma_minus_r: f64,
    #[serde(rename = "Gamma_minus_L")]
    pub gamma_minus_l: f64,
    pub x: f64,
    pub y: f64,
    pub g_minus: f64,
    /// `κ₀/Γ₋`; `None` when `Γ₋ = 0`.
    #[serde(rename = "Lambda")]
    pub lambda: Option<f64>,
    /// `2Γ₋R η²/Γ₋²`; `None` when `Γ₋ = 0`.
    #[serde(rename = "N_eta")]
    pub n_eta: Option<f64>,
    /// `γ₁ = γ₂` with `γ₁₂ = 0`: the normal modes are not unique.
    pub degenerate: bool,
    #[serde(skip)]
    pub s_plus: [f64; 2],
    #[serde(skip)]
    pub s_minus: [f64; 2],
}

pub fn derive_rates(p: &TwoModeParams) -> Result<DerivedRates> {
    p.validate()?;
    let gamma_1 = p.gamma_1r + p.gamma_1l;
    let gamma_2 = p.gamma_2r + p.gamma_2l;
    if gamma_2 == 0.0 {
        return Err(Error::Undefined("x and y need gamma_2 > 0".into()));
    }
    let gamma_12 = (p.gamma_1r * p.gamma_2r).sqrt() + (p.gamma_1l * p.gamma_2l).sqrt();

    // γ₁γ₂ − γ₁₂² = (√(γ1R γ2L) − √(γ1L γ2R))², which is exactly zero for
    // symmetric couplings; Γ₋ = det/Γ₊ avoids the cancellation in (Σ − s)/2.
    let det = ((p.gamma_1r * p.gamma_2l).sqrt() - (p.gamma_1l * p.gamma_2r).sqrt()).powi(2);
    let split = ((gamma_1 - gamma_2).powi(2) + 4.0 * gamma_12 * gamma_12).sqrt();
    let gamma_plus = (gamma_1 + gamma_2 + split) / 2.0;
    let gamma_minus = if gamma_plus > 0.0 { det / gamma_plus } else { 0.0 };

    let degenerate = split <= 1e-14 * (gamma_1 + gamma_2);
    let theta = if degenerate {
        std::f64::consts::FRAC_PI_2
    } else if gamma_1 >= gamma_2 {
        (2.0 * gamma_12).atan2(gamma_1 - gamma_2 + split)
    } else {
        // Same angle, written without the cancellation in γ₁ − γ₂ + s.
        (split + gamma_2 - gamma_1).atan2(2.0 * gamma_12)
    };
    let (sin, cos) = theta.sin_cos();
    let amp = |g1: f64, g2: f64| {
        let (r1, r2) = (g1.sqrt(), g2.sqrt());
        (r1 * cos + r2 * sin, r1 * sin - r2 * cos)
    };
    let (sp_r, sm_r) = amp(p.gamma_1r, p.gamma_2r);
    let (sp_l, sm_l) = amp(p.gamma_1l, p.gamma_2l);
    let gamma_minus_r = sm_r * sm_r;

    let (lambda, n_eta) = if gamma_minus > 0.0 {
        (
            Some(p.kappa_0 / gamma_minus),
            Some(2.0 * gamma_minus_r * p.eta * p.eta / (gamma_minus * gamma_minus)),
        )
    } else {
        (None, None)
    };

    Ok(DerivedRates {
        gamma_1,
        gamma_2,
        gamma_12,
        theta,
        gamma_plus,
        gamma_minus,
        gamma_plus_r: sp_r * sp_r,
        gamma_plus_l: sp_l * sp_l,
        gamma_minus_r,
        gamma_minus_l: sm_l * sm_l,
        x: (p.gamma_2r - p.gamma_2l) / gamma_2,
        y: gamma_1 / gamma_2,
        g_minus: p.g * sin.powi(4),
        lambda,
        n_eta,
        degenerate,
        s_plus: [sp_r, sp_l],
        s_minus: [sm_r, sm_l],
    })
}

impl DerivedRates {
    /// Drive amplitude `η = Γ₋ √(N_η / 2Γ₋R)`.
    pub fn eta_for_n_eta(&self, n_eta: f64) -> Result<f64> {
        if !(n_eta.is_finite() && n_eta >= 0.0) {
            return Err(Error::InvalidParams(format!("N_eta = {n_eta} must be >= 0")));
        }
        if self.gamma_minus <= 0.0 || self.gamma_minus_r <= 0.0 {
            return Err(Error::Undefined(
                "N_eta needs Gamma_minus > 0 and Gamma_minus_R > 0".into(),
            ));
        }
        Ok(self.gamma_minus * (n_eta / (2.0 * self.gamma_minus_r)).sqrt())
    }

    /// Mixing matrix `[[cosθ, sinθ], [sinθ, −cosθ]]` from `(a₁, a₂)` to `(A₊, A₋)`.
    pub fn rotation(&self) -> [[f64; 2]; 2] {
        let (s, c) = self.theta.sin_cos();
        [[c, s], [s, -c]]
    }
}

/// One advisory inequality of the blockade regime.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegimeCheck {
    pub name: &'static str,
    pub satisfied: bool,
    /// Left side over right side; `≪` counts as satisfied at ratio ≤ 1/3.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegimeReport {
    pub checks: Vec<RegimeCheck>,
    /// `x / √(g/γ₁)`, the asymmetry in units of the blockade scale.
    pub x_over_sqrt_g_gamma1: f64,
    pub degenerate: bool,
}

impl RegimeReport {
    pub fn all_satisfied(&self) -> bool {
        self.checks.iter().all(|c| c.satisfied)
    }

    pub fn check(&self, name: &str) -> Option<&RegimeCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const MUCH_LESS: f64 = 1.0 / 3.0;

/// Reports `κ₀ < g`, `g ≪ γ_jα`, `|x| ≪ 2√(g/γ₁)` and `Γ₋ ≪ g₋`.
/// Purely diagnostic.
pub fn validate_regime(p: &TwoModeParams) -> Result<RegimeReport> {
    let r = derive_rates(p)?;
    let ratio = |lhs: f64, rhs: f64| {
        if rhs > 0.0 {
            lhs / rhs
        } else if lhs > 0.0 {
            f64::INFINITY
        } else {
            f64::NAN
        }
    };
    let much_less = |q: f64| q <= MUCH_LESS;

    let loss = ratio(p.kappa_0, p.g);
    let min_gamma = [p.gamma_1r, p.gamma_1l, p.gamma_2r, p.gamma_2l]
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let kerr = ratio(p.g, min_gamma);
    let blockade_scale = if r.gamma_1 > 0.0 { (p.g / r.gamma_1).sqrt() } else { f64::INFINITY };
    let asym = ratio(r.x.abs(), 2.0 * blockade_scale);
    let dark = ratio(r.gamma_minus, r.g_minus);

    Ok(RegimeReport {
        checks: vec![
            RegimeCheck {
                name: "kappa_0 < g",
                satisfied: loss < 1.0,
                ratio: loss,
            },
            RegimeCheck {
                name: "g << gamma_ja",
                satisfied: much_less(kerr),
                ratio: kerr,
            },
            RegimeCheck {
                name: "|x| << 2 sqrt(g/gamma_1)",
                satisfied: much_less(asym),
                ratio: asym,
            },
            RegimeCheck {
                name: "Gamma_minus << g_minus",
                satisfied: much_less(dark),
                ratio: dark,
            },
        ],
        x_over_sqrt_g_gamma1: r.x / blockade_scale,
        degenerate: r.degenerate,
    })
}

/// Adiabatic elimination of the auxiliary resonators: `γ_jα = λ_jα²/κ_α`.
pub fn reduce_four_mode(p: &FourModeParams) -> Result<TwoModeParams> {
    p.validate()?;
    Ok(TwoModeParams {
        gamma_1r: p.lambda_1r * p.lambda_1r / p.kappa_r,
        gamma_1l: p.lambda_1l * p.lambda_1l / p.kappa_l,
        gamma_2r: p.lambda_2r * p.lambda_2r / p.kappa_r,
        gamma_2l: p.lambda_2l * p.lambda_2l / p.kappa_l,
        kappa_0: p.kappa_0,
        g: p.g,
        delta: p.delta,
        eta: p.eta,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Environment {
    R,
    L,
}

/// Provenance of a jump operator. All of them enter the dissipator with the
/// same `2JρJ† − {J†J, ρ}` normalization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum JumpKind {
    /// Collective `J_α` of the reduced model.
    Collective(Environment),
    /// Local `√κ₀ a_j`.
    Local(usize),
    /// `√κ_α b_α` of an auxiliary resonator.
    Auxiliary(Environment),
}

#[derive(Clone, Debug)]
pub struct Jump {
    pub op: Operator,
    pub kind: JumpKind,
}

/// Hamiltonian, jumps and output operator of one master equation.
///
/// `drive` is the part of `hamiltonian` proportional to `η`; the rest
/// conserves the total excitation number.
#[derive(Clone, Debug)]
pub struct SystemOperators {
    pub space: HilbertSpace,
    pub hamiltonian: Operator,
    pub drive: Operator,
    pub jumps: Vec<Jump>,
    /// Output-field operator `K` with `⟨K⟩ = Tη` and flux `⟨K†K⟩`.
    pub output: Operator,
    pub eta: f64,
    /// Hash of the parameters and truncation that built these operators.
    pub fingerprint: String,
}

impl SystemOperators {
    pub fn undriven_hamiltonian(&self) -> Operator {
        &self.hamiltonian - &self.drive
    }
}

fn check_modes(space: &HilbertSpace, expected: usize) -> Result<()> {
    if space.n_modes() != expected {
        return Err(Error::InvalidSpace(format!(
            "expected {expected} modes, got {}",
            space.n_modes()
        )));
    }
    Ok(())
}

fn kerr(a: &Operator) -> Operator {
    let ad = a.adjoint();
    &(&(&ad * &ad) * a) * a
}

/// Mode basis of the reduced model's truncated space.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// Bare cavity modes `(a₁, a₂)`.
    Bare,
    /// Normal modes `(A₋, A₊)`, dark mode first. The dissipator is diagonal
    /// here, so the slow dark sector is not assembled from cancelling
    /// bare-mode entries; this is the basis used for the numerics.
    #[default]
    Normal,
}

/// Operators of the reduced model on a two-mode space `(a₁, a₂)`.
pub fn build_two_mode_system(p: &TwoModeParams, space: &HilbertSpace) -> Result<SystemOperators> {
    build_two_mode_system_in(p, space, Basis::Bare)
}

/// Operators of the reduced model with the modes of `space` taken in `basis`.
pub fn build_two_mode_system_in(p: &TwoModeParams, space: &HilbertSpace, basis: Basis) -> Result<SystemOperators> {
    p.validate()?;
    check_modes(space, 2)?;
    let m0 = annihilator(space, 0)?;
    let m1 = annihilator(space, 1)?;
    let (a1, j_r, j_l, tag) = match basis {
        Basis::Bare => {
            let j_r = &(&m0 * p.gamma_1r.sqrt()) + &(&m1 * p.gamma_2r.sqrt());
            let j_l = &(&m0 * p.gamma_1l.sqrt()) + &(&m1 * p.gamma_2l.sqrt());
            (m0.clone(), j_r, j_l, 0.0)
        }
        Basis::Normal => {
            let rates = derive_rates(p)?;
            let (sin, cos) = rates.theta.sin_cos();
            // a₁ = cosθ A₊ + sinθ A₋
            let a1 = &(&m1 * cos) + &(&m0 * sin);
            let jump = |k: usize| &(&m1 * rates.s_plus[k]) + &(&m0 * rates.s_minus[k]);
            (a1, jump(0), jump(1), 1.0)
        }
    };

    let n_total = &number_operator(space, 0)? + &number_operator(space, 1)?;
    let drive = &(&j_r + &j_r.adjoint()) * (2f64.sqrt() * p.eta);
    let hamiltonian = &(&(&n_total * p.delta) + &(&kerr(&a1) * p.g)) + &drive;

    let mut jumps = vec![
        Jump {
            op: j_r.clone(),
            kind: JumpKind::Collective(Environment::R),
        },
        Jump {
            op: j_l,
            kind: JumpKind::Collective(Environment::L),
        },
    ];
    if p.kappa_0 > 0.0 {
        // Σ_j D[√κ₀ m_j] is the same for any orthonormal choice of modes.
        for (j, a) in [m0, m1].into_iter().enumerate() {
            jumps.push(Jump {
                op: &a * p.kappa_0.sqrt(),
                kind: JumpKind::Local(j),
            });
        }
    }

    let output = &(&Operator::identity(space) * p.eta) - &(&j_r * C64::new(0.0, 2f64.sqrt()));
    let mut values = p.as_array().to_vec();
    values.push(tag);
    Ok(SystemOperators {
        space: space.clone(),
        hamiltonian,
        drive,
        jumps,
        output,
        eta: p.eta,
        fingerprint: fingerprint(&values, space.dims()),
    })
}

/// Operators of the circuit model on a four-mode space `(a₁, a₂, b_R, b_L)`.
///
/// The output operator is `√(2κ_R) b_R − η`, whose phase convention makes it
/// coincide with the reduced model's `η − √2 i J_R` after elimination.
pub fn build_four_mode_system(p: &FourModeParams, space: &HilbertSpace) -> Result<SystemOperators> {
    p.validate()?;
    check_modes(space, 4)?;
    let a1 = annihilator(space, 0)?;
    let a2 = annihilator(space, 1)?;
    let b_r = annihilator(space, 2)?;
    let b_l = annihilator(space, 3)?;

    let n_a = &number_operator(space, 0)? + &number_operator(space, 1)?;
    let mut h = &(&n_a * p.delta) + &(&kerr(&a1) * p.g);
    for (a, l_r, l_l) in [(&a1, p.lambda_1r, p.lambda_1l), (&a2, p.lambda_2r, p.lambda_2l)] {
        for (b, l) in [(&b_r, l_r), (&b_l, l_l)] {
            let hop = a * &b.adjoint();
            h = &h + &(&(&hop + &hop.adjoint()) * l);
        }
    }
    let drive = &(&b_r.adjoint() - &b_r) * C64::new(0.0, (2.0 * p.kappa_r).sqrt() * p.eta);
    let hamiltonian = &h + &drive;

    let mut jumps = vec![
        Jump {
            op: &b_r * p.kappa_r.sqrt(),
            kind: JumpKind::Auxiliary(Environment::R),
        },
        Jump {
            op: &b_l * p.kappa_l.sqrt(),
            kind: JumpKind::Auxiliary(Environment::L),
        },
    ];
    if p.kappa_0 > 0.0 {
        for (j, a) in [a1, a2].into_iter().enumerate() {
            jumps.push(Jump {
                op: &a * p.kappa_0.sqrt(),
                kind: JumpKind::Local(j),
            });
        }
    }

    let output = &(&b_r * (2.0 * p.kappa_r).sqrt()) - &(&Operator::identity(space) * p.eta);
    Ok(SystemOperators {
        space: space.clone(),
        hamiltonian,
        drive,
        jumps,
        output,
        eta: p.eta,
        fingerprint: fingerprint(&p.as_array(), space.dims()),
    })
}

/// FNV-1a over the bit patterns of `values` and the truncation, as 16 hex
/// digits.
pub fn fingerprint(values: &[f64], dims: &[usize]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let bytes = values
        .iter()
        .flat_map(|v| v.to_bits().to_le_bytes())
        .chain(dims.iter().flat_map(|d| (*d as u64).to_le_bytes()));
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}
