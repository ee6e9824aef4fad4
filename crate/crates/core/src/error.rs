use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("derivative order {order} is not supported for degree {degree}")]
    UnsupportedOrder { order: usize, degree: usize },

    #[error("parameter {t} lies outside the domain [{lower}, {upper}]")]
    Domain { t: f64, lower: f64, upper: f64 },

    #[error("invalid knot vector: {0}")]
    InvalidKnots(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("{what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("fairing weight {value} at control point {index} is invalid: {reason}")]
    InvalidWeight {
        index: usize,
        value: f64,
        reason: String,
    },

    #[error("control point {index} has a vanishing functional diagonal ({diagonal:e})")]
    ExcludedPoint { index: usize, diagonal: f64 },

    #[error("functional {kind} is not available for this geometry: {reason}")]
    UnsupportedFunctional { kind: String, reason: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("model file line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("model file field `{field}`: {message}")]
    Field { field: String, message: String },

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    /// A short machine-readable code for each variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::UnsupportedOrder { .. } => "unsupported_order",
            Error::Domain { .. } => "domain",
            Error::InvalidKnots(_) => "invalid_knots",
            Error::InvalidGeometry(_) => "invalid_geometry",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::InvalidWeight { .. } => "invalid_weight",
            Error::ExcludedPoint { .. } => "excluded_point",
            Error::UnsupportedFunctional { .. } => "unsupported_functional",
            Error::Numerical(_) => "numerical",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Parse { .. } => "parse_error",
            Error::Field { .. } => "invalid_field",
            Error::Io { .. } => "io",
        }
    }
}
