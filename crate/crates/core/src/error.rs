use thiserror::Error;

/// Failures raised by the state-merging laboratory.
///
/// Variants fall into three groups that the command line maps onto exit codes:
/// bad input, exceeded resources, and violated numerical properties.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("subsystem label `{0}` appears more than once")]
    LabelCollision(String),

    #[error("unknown subsystem label `{0}`")]
    UnknownLabel(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("state is not normalized (norm or trace {0})")]
    NotNormalized(f64),

    #[error("operator is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("operator is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("matrix is not an isometry (deviation {0:e})")]
    NotIsometry(f64),

    #[error("Kraus operators do not sum to identity (deviation {0:e})")]
    InvalidChannel(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("global state is mixed (purity {0})")]
    MixedState(f64),

    #[error("dimension {requested} exceeds the cap {cap}")]
    CapExceeded { requested: usize, cap: usize },

    #[error("typical-set enumeration too large: {0}")]
    EnumerationTooLarge(String),

    #[error("typicality failed: overlap {0} is below 1/2")]
    TypicalityFailed(f64),
}

impl Error {
    /// True for errors caused by resource limits rather than malformed input.
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::CapExceeded { .. } | Error::EnumerationTooLarge(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
