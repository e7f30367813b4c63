use thiserror::Error;

/// Errors raised by the numerical routines and the batch front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid composite structure: {0}")]
    InvalidStructure(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("part index {index} out of range for {parts} part(s)")]
    InvalidPart { index: usize, parts: usize },

    #[error("expected {expected} part(s), got {found}")]
    WrongPartCount { expected: usize, found: usize },

    #[error("operator is not Hermitian (max |A - A^dagger| = {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("state is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("trace mismatch: expected {expected}, found {found}")]
    TraceMismatch { expected: f64, found: f64 },

    #[error("missing normalization metadata (N, p)")]
    MissingNormMeta,

    #[error("operator has zero trace; no product counterpart exists")]
    ZeroTrace,

    #[error("degenerate denominator: disentangled norm of the product counterpart is {0:e}")]
    DegenerateDenominator(f64),

    #[error("negative eigenvalue {0:e} in a density matrix")]
    NegativeEigenvalue(f64),

    #[error("invalid mode populations: {0}")]
    InvalidPopulations(String),

    #[error("problem too large for the exhaustive oracle: {0}")]
    TooLarge(String),

    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },

    #[error("step limit exhausted at t = {t}")]
    TooManySteps { t: f64 },

    #[error("initial state violates the constraints (residual {residual:e})")]
    InitialConstraint { residual: f64 },

    #[error("constraint residual {residual:e} exceeds abort threshold at t = {t}")]
    ConstraintBlowUp { t: f64, residual: f64 },

    #[error("negative population {value:e} at t = {t}")]
    NegativePopulation { t: f64, value: f64 },

    #[error("invalid value for `{field}`: {message}")]
    InvalidField { field: String, message: String },

    #[error("failed to parse `{field}`: {message}")]
    Parse { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidField {
            field: field.into(),
            message: message.into(),
        }
    }
}
