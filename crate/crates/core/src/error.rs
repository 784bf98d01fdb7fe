use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("model mismatch: expected {expected}, found {found}")]
    ModelMismatch { expected: String, found: String },

    #[error("operation `{op}` is not supported on the {model} model")]
    UnsupportedModel { op: &'static str, model: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("under-resolved: {0}")]
    UnderResolved(String),

    #[error("point {point:?} lies outside the grid box")]
    OutsideBox { point: Vec<f64> },

    #[error("not a frame: lower bound {lower:e} is numerically zero")]
    NotAFrame { lower: f64 },

    #[error("iteration stagnated after {iterations} steps (residual {residual:e})")]
    Stagnation { iterations: usize, residual: f64 },

    #[error("empty space: {0}")]
    EmptySpace(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
