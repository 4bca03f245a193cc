use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {lhs:?} vs {rhs:?}")]
    ShapeMismatch { lhs: Vec<usize>, rhs: Vec<usize> },

    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error("axis {axis} out of range for tensor of rank {rank}")]
    AxisOutOfRange { axis: usize, rank: usize },

    #[error("backward needs a scalar loss, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),

    #[error("no gradient for parameters: {}", .0.join(", "))]
    MissingGrad(Vec<String>),

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("parameter `{0}` registered twice")]
    DuplicateParameter(String),

    #[error("{}:{row}:{column}: {detail}", .path.display())]
    Parse {
        path: PathBuf,
        row: usize,
        column: usize,
        detail: String,
    },

    #[error("target column `{0}` not found")]
    MissingTarget(String),

    #[error("row {row} has {found} cells, header has {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("channel `{0}` is constant on the training split (std < 1e-8)")]
    ConstantChannel(String),

    #[error("degenerate split: {0}")]
    DegenerateSplit(String),

    #[error("window too short: need at least 2 steps, got {0}")]
    WindowTooShort(usize),

    #[error("affine scale too close to zero (|gamma| < 1e-8) on channel {0}")]
    GammaZero(usize),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("infeasible synthetic spec: {0}")]
    InfeasibleSpec(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn shape(lhs: &[usize], rhs: &[usize]) -> Self {
        Error::ShapeMismatch {
            lhs: lhs.to_vec(),
            rhs: rhs.to_vec(),
        }
    }

    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            op,
            detail: detail.into(),
        }
    }

    /// True for errors caused by bad user input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::MissingTarget(_)
                | Error::RaggedRow { .. }
                | Error::ConstantChannel(_)
                | Error::DegenerateSplit(_)
                | Error::InfeasibleSpec(_)
                | Error::InvalidConfig(_)
        )
    }
}
