use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Structural problem with a model description (bad dimensions, bad schedule).
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("pmf mass {mass} ≠ 1 at {location}")]
    PmfMass { mass: f64, location: String },

    /// Argument outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("assumption {assumption} fails at {cell}")]
    AssumptionFailed { assumption: u8, cell: String },

    #[error("support of {what} exceeds cap of {cap} atoms")]
    SupportCap { what: String, cap: usize },

    #[error("population of {total} exceeds particle cap {cap}")]
    ParticleCap { total: u64, cap: u64 },

    #[error("truncated mass {lost:e} is not below tolerance {tol:e}")]
    Truncation { lost: f64, tol: f64 },

    #[error("conditioning event empty")]
    EmptyConditioning,

    #[error("horizon mismatch: need {needed}, have {available}")]
    HorizonMismatch { needed: usize, available: usize },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by the caller's input rather than by a computation.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidModel(_) | Error::PmfMass { .. } | Error::Json(_) | Error::Io(_)
        )
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidModel(msg.into())
    }
}
