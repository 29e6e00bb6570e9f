use thiserror::Error;

/// Errors produced by grid construction, kernel assembly, potential
/// evaluation and time integration.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("{name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("quadrature did not reach relative tolerance {tol:e} (best estimate {estimate:e})")]
    QuadratureFailure { tol: f64, estimate: f64 },

    #[error("operator undefined on fields with nonzero mean (|mean| = {mean:e}, bound {bound:e})")]
    NonzeroMean { mean: f64, bound: f64 },

    #[error("potential evaluated outside its domain at u = {value}")]
    PotentialDomain { value: f64 },

    #[error("operation not supported for the {0} potential")]
    UnsupportedPotential(&'static str),

    #[error("ratio undefined for constant fields")]
    ConstantField,

    #[error("numerical failure at step {step} (t = {time:e}): {detail}")]
    NumericalFailure {
        step: usize,
        time: f64,
        detail: String,
    },

    #[error("sweep plan: {0}")]
    InvalidPlan(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the integration itself (blow-up or loss of
    /// energy monotonicity), as opposed to rejected inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NumericalFailure { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
