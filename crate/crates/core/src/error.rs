use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KineticError {
    #[error("scale must be positive and finite, got {0}")]
    NonPositiveScale(f64),

    #[error("radius must be nonnegative, got {0}")]
    NegativeRadius(f64),

    #[error("trajectory time parameter m0 must be nonzero")]
    ZeroTimeParameter,

    #[error("offset time component vanishes; trajectory parameters are undefined")]
    DegenerateOffset,

    #[error("exponent {0} outside [1, inf]")]
    InvalidExponent(f64),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("x-axis length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("field does not decay at the x-boundary (relative boundary value {0:e})")]
    NonDecaying(f64),

    #[error("shift {0} is not a multiple of the x-spacing {1}")]
    OffGridShift(f64, f64),

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("dyadic index {j} outside bank range [{min}, {max}]")]
    OutOfBank { j: i32, min: i32, max: i32 },

    #[error("kernel support extent {extent} exceeds evaluation margin {margin} on axis {axis}")]
    SupportTooLarge {
        axis: &'static str,
        extent: f64,
        margin: f64,
    },

    #[error("quadrature needs at least {min} nodes, got {got}")]
    TooFewNodes { min: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for KineticError {
    fn from(e: std::io::Error) -> Self {
        KineticError::Io(e.to_string())
    }
}

pub type Result<T, E = KineticError> = std::result::Result<T, E>;
