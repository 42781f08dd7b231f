use thiserror::Error;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("unsupported dimension {0}: only 2 and 3 are supported")]
    UnsupportedDimension(usize),

    #[error("unsupported transform length {0}: points per dimension must be a power of two >= 4")]
    UnsupportedLength(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("hermitian symmetry violated: relative defect {0:.3e}")]
    HermitianViolation(f64),

    #[error("field is not divergence free: relative defect {0:.3e}")]
    NotDivergenceFree(f64),

    #[error("non-finite state at t = {last_valid_time}: time step too large or solution blew up")]
    BlowUp { last_valid_time: f64 },

    #[error("initial data incompatible with grid: {0}")]
    IncompatibleInitialData(String),

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, FlowError>;
