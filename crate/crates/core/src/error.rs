use thiserror::Error;

/// Errors produced by model evaluation, quantizer design and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid model parameters: {0}")]
    InvalidModel(String),

    #[error("invalid simplex point: {0}")]
    InvalidPoint(String),

    /// The secant slope of a cell fell outside the derivative range at its
    /// endpoints. Cannot happen for a strictly concave risk.
    #[error("bracket error: secant slope {slope} outside [{hi}, {lo}]")]
    Bracket { slope: f64, lo: f64, hi: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("thresholds are inconsistent (gamma01 = {gamma01} > gamma12 = {gamma12})")]
    InconsistentThresholds { gamma01: f64, gamma12: f64 },

    #[error("failed to converge after {iterations} iterations: {what}")]
    Convergence { what: String, iterations: usize },

    #[error("gradient {0:?} is outside the image of the risk gradient")]
    OutOfImage(Vec<f64>),

    #[error("empty cell {0}")]
    EmptyCell(usize),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("unsupported number of hypotheses: {0}")]
    UnsupportedDimension(usize),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
