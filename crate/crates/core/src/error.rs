use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("world generation failed after {attempts} attempts: {reason}")]
    Generation { attempts: u32, reason: String },

    #[error("agent at ({x:.3}, {y:.3}) is inside an obstacle")]
    InsideObstacle { x: f64, y: f64 },

    #[error("unreachable goal set")]
    UnreachableGoal,

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("all sample costs are non-finite")]
    AllCostsNonFinite,

    #[error("no navigable cells")]
    NoNavigableCells,

    #[error("empty input: {0}")]
    Empty(String),

    #[error("duplicate world seed {0}")]
    DuplicateSeed(u64),

    #[error("tensor format: {0}")]
    Tensor(#[from] crate::dataset::smt::TensorError),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("predictor timed out after {0:?}")]
    Timeout(std::time::Duration),

    #[error("io: {0}")]
    Io(#[from] io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("image: {0}")]
    Image(#[from] image::ImageError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
