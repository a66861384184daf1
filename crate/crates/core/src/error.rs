use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Hilbert space: {0}")]
    InvalidSpace(String),

    #[error("mode index {mode} out of range for a {n_modes}-mode space")]
    ModeOutOfRange { mode: usize, n_modes: usize },

    #[error("operators act on different spaces ({left:?} vs {right:?})")]
    SpaceMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("quantity undefined: {0}")]
    Undefined(String),

    #[error("steady state is not unique (bordered Liouvillian is singular, rcond = {rcond:e})")]
    SingularSteadyState { rcond: f64 },

    #[error("steady-state residual {residual:e} exceeds tolerance {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("iterative solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular matrix block: {0}")]
    SingularBlock(String),

    #[error("no output flux (denominator of g2 vanishes)")]
    ZeroFlux,

    #[error("Liouvillian dimension {dim} exceeds the dense limit {limit}")]
    TooLarge { dim: usize, limit: usize },

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("state is not physical: {0}")]
    Unphysical(String),

    #[error("excitation number is not conserved by {0}")]
    NotConserving(String),

    #[error("at N_eta = {n_eta:e}: {source}")]
    AtPoint {
        n_eta: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("at scale {scale}: {source}")]
    AtScale {
        scale: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Linalg(#[from] ndarray_linalg::error::LinalgError),
}

impl Error {
    /// Whether the error stems from the numerics rather than from the inputs.
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::SingularSteadyState { .. }
            | Error::Residual { .. }
            | Error::NoConvergence { .. }
            | Error::SingularBlock(_)
            | Error::ZeroFlux
            | Error::TooLarge { .. }
            | Error::Linalg(_) => true,
            Error::AtPoint { source, .. } | Error::AtScale { source, .. } => {
                source.is_solver_failure()
            }
            _ => false,
        }
    }
}
