use thiserror::Error;

use crate::trajectory::Trajectory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} index {index} out of range (len {len})")]
    Index {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("robot pair ({0}, {0}) is not a pair of distinct robots")]
    SelfPair(usize),

    #[error("shape mismatch: expected {expected}, found {found}")]
    Shape { expected: String, found: String },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(
        "convex set is empty: robot {robot} needs {required:.6} per step but is limited to {limit:.6}"
    )]
    ConvexInfeasible {
        robot: usize,
        required: f64,
        limit: f64,
    },

    #[error("convex projection did not converge after {iterations} cycles (last change {residual:.3e})")]
    ConvexNotConverged {
        iterations: usize,
        residual: f64,
        last: Box<Trajectory>,
    },

    #[error("diffusion step {t} outside 0..={max}")]
    StepOutOfRange { t: usize, max: usize },

    #[error("empty batch")]
    EmptyBatch,

    #[error("non-finite training loss at epoch {epoch}, batch {batch} (last finite loss {last_loss:?})")]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        last_loss: Option<f64>,
    },

    #[error("placement failed in zone `{zone}` after {attempts} attempts")]
    Placement { zone: String, attempts: usize },

    #[error("missing evaluation records for: {}", .0.join(", "))]
    MissingRecords(Vec<String>),

    #[error("unsupported checkpoint version {found} (expected {expected})")]
    CheckpointVersion { found: u32, expected: u32 },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn shape(expected: impl std::fmt::Display, found: impl std::fmt::Display) -> Self {
        Self::Shape { expected: expected.to_string(), found: found.to_string() }
    }
}
