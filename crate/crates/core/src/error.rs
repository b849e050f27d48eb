use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension {dim} exceeds the configured cap {cap}")]
    Capacity { dim: u128, cap: usize },
    #[error("infeasible target: {reason} (residual {residual:e})")]
    Infeasible { reason: String, residual: f64 },
    #[error("solver did not converge in {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("finite-difference stencil leaves the interior: {0}")]
    BoundaryProximity(String),
    #[error("transformation violates the second law (delta = {delta:e})")]
    NegativeGap { delta: f64 },
    #[error("no feasible bath rate below {r_max:e}")]
    UnboundedRate { r_max: f64 },
    #[error("trimming kept no eigenvalues; increase alpha or n")]
    DegenerateTrim,
    #[error("sampling failed: {0}")]
    Sampling(String),
    #[error("states are not equivalent: {0}")]
    NotEquivalent(String),
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Capacity { .. } => 3,
            Error::Infeasible { .. }
            | Error::NotConverged { .. }
            | Error::BoundaryProximity(_)
            | Error::NegativeGap { .. }
            | Error::UnboundedRate { .. }
            | Error::DegenerateTrim
            | Error::Sampling(_)
            | Error::NotEquivalent(_) => 1,
            _ => 2,
        }
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
