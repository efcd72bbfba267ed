use thiserror::Error;

/// Errors raised by the geometry engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("chart axis {index} out of range for chart dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("chart dimension {0} exceeds the supported maximum of {max}", max = crate::jet::MAX_DIM)]
    DimensionTooLarge(usize),

    #[error("{what}: expected dimension {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("domain violation in `{op}` at argument {value:e}")]
    Domain { op: &'static str, value: f64 },

    #[error("Newton iteration did not converge after {iterations} steps (|F| = {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("vanishing derivative dF/dr = {0:e} at the root")]
    SingularDerivative(f64),

    #[error("point {point:?} is outside the admissible domain of `{model}`: {reason}")]
    OutsideDomain {
        model: String,
        point: Vec<f64>,
        reason: String,
    },

    #[error("metric of `{model}` is near-singular at {point:?} (condition number {condition:e})")]
    IllConditioned {
        model: String,
        point: Vec<f64>,
        condition: f64,
    },

    #[error("non-finite value produced while evaluating {0}")]
    NonFinite(String),

    #[error("vector field `{label}` is not null at {point:?} (g(k,k) = {residual:e})")]
    NotNull {
        label: String,
        point: Vec<f64>,
        residual: f64,
    },

    #[error("degenerate frame pivot: {0}")]
    DegeneratePivot(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("twist is singular on the screen (smallest singular value {smallest:e})")]
    SingularTwist { smallest: f64 },

    #[error("frame field is not smooth across the difference stencil: {0}")]
    NonSmoothFrame(String),

    #[error("indeterminate flag `{flag}`: magnitude {magnitude:e} lies in the band [{lower:e}, {upper:e}]")]
    Indeterminate {
        flag: &'static str,
        magnitude: f64,
        lower: f64,
        upper: f64,
    },

    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),

    #[error("entry `{entry}` has no congruence labelled `{label}`")]
    UnknownCongruence { entry: String, label: String },

    #[error("unknown parameter `{param}` for entry `{entry}`")]
    UnknownParameter { entry: String, param: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
