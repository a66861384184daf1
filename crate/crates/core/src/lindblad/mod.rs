//! Master-equation numerics: generator assembly, steady states, time
//! evolution and output-field correlations.

mod evolve;
mod liouvillian;
mod observables;
mod state;
mod steady;

pub use evolve::{evolve, evolve_many};
pub use liouvillian::{
    build_liouvillian, build_liouvillian_as, trace_conservation, trace_functional, unvectorize, vectorize, Liouvillian, Storage, StorageKind,
    DENSE_LIMIT,
};
pub use observables::{
    antibunching_time, check_grid, default_tau_grid, g2_regression, g2_regression_from_state, g2_zero_direct,
    jump_fluxes, linear_tau_grid, observe, output_flux, transmission_from_state, transmission_numeric,
    CorrelationTrace, SteadyObservables,
};
pub use state::{DensityMatrix, HERMITICITY_TOL, POSITIVITY_TOL, TRACE_TOL};
pub use steady::{relative_residual, steady_state, steady_state_iterative, steady_state_with, SteadyOptions};

#[cfg(test)]
mod tests;
