//! Numerical kernels shared by the master-equation solvers.
//!
//! Dense factorizations come from LAPACK through `ndarray-linalg`; the
//! pieces here are the ones it does not provide.

mod expm;
mod gmres;
mod sparse;

pub use expm::{expm, one_norm, propagate_many, propagate_many_conserving, Conserved};
pub use gmres::{gmres, GmresOptions, GmresStats};
pub use sparse::{nonzeros, push_kron, Csr};
