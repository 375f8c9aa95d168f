use thiserror::Error;

/// Errors raised by the merit-function library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("matrix is not symmetric: asymmetry {asymmetry:e} exceeds {limit:e}")]
    Asymmetric { asymmetry: f64, limit: f64 },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal residual {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown problem `{name}`; available: {}", available.join(", "))]
    UnknownProblem {
        name: String,
        available: Vec<String>,
    },

    #[error("problem `{0}` has the wrong kind for this operation")]
    WrongProblemKind(String),

    #[error("start outside Omega_alpha: merit function is +inf at the start and no finite point was recovered")]
    StartOutsideDomain,

    #[error("interior start required: p must be > 0 at the start")]
    InteriorStartRequired,

    #[error("point fails the KKT check: {0}")]
    NotKkt(String),

    #[error("grid of {requested} points exceeds the budget of {budget}")]
    GridBudget { requested: u128, budget: u128 },

    #[error("io: {0}")]
    Io(String),

    #[error("json: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
