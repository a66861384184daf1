//! Photon blockade in a collectively decaying two-mode Kerr system.
//!
//! Two bosonic modes decay collectively into two engineered environments
//! (`R` and `L`) through jump operators `J_α = √γ_1α a₁ + √γ_2α a₂`. Near
//! symmetric coupling one normal mode becomes almost dark, inherits the Kerr
//! nonlinearity of mode 1, and turns the reflected drive into antibunched
//! light. The crate computes the output observables three ways:
//!
//! * [`lindblad`]: exact master-equation numerics on a truncated Fock space
//!   (steady state, propagation, quantum-regression `g²(τ)`);
//! * [`scattering`]: weak-drive analytics from the non-Hermitian effective
//!   Hamiltonian in the one- and two-excitation sectors;
//! * closed-form transmission and `g²(τ)` expansions (also in [`scattering`]).
//!
//! [`experiments`] orchestrates the parameter sweeps and the four-mode
//! circuit model with auxiliary resonators, and [`cli`] is the command-line
//! front end.
//!
//! All dissipators use the convention `D[J]ρ = 2JρJ† − J†Jρ − ρJ†J`, so a
//! jump operator `√κ a` empties the mode at rate `2κ`.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod fock;
pub mod linalg;
pub mod lindblad;
pub mod model;
pub mod par;
pub mod scattering;
pub mod selftest;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
