use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("ragged input on line {line}: expected {expected} columns, found {found}")]
    Shape {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error(
        "insufficient data: {assets} assets need at least {required} observations, found {found}"
    )]
    InsufficientData {
        assets: usize,
        required: usize,
        found: usize,
    },

    #[error(
        "singular covariance: Cholesky pivot {pivot:e} at index {index} is not above {threshold:e}"
    )]
    SingularCovariance {
        index: usize,
        pivot: f64,
        threshold: f64,
    },

    #[error("asymmetric covariance at ({row}, {col}): {upper} vs {lower}")]
    AsymmetricCovariance {
        row: usize,
        col: usize,
        upper: f64,
        lower: f64,
    },

    #[error("non-positive expected return {value} for asset '{label}'")]
    NonPositiveReturn { label: String, value: f64 },

    #[error(
        "degenerate universe: expected returns are proportional to the unit vector (D = {d:e})"
    )]
    DegenerateUniverse { d: f64 },

    #[error("infeasible risk {risk}: minimum attainable risk is {minimum}")]
    InfeasibleRisk { risk: f64, minimum: f64 },

    #[error("rescaling is ill-defined for a zero (critical) budget")]
    CriticalBudget,

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("singular KKT system (pivot {pivot:e} at step {step})")]
    SingularKkt { step: usize, pivot: f64 },

    #[error("degenerate plot range: all points coincide")]
    DegenerateRange,

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
