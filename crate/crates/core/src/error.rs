use std::path::PathBuf;

use crate::qp::QpStatus;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    Dimension {
        op: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("rank condition failed: {what} has rank {rank}, need {required}")]
    RankDeficient {
        what: &'static str,
        rank: usize,
        required: usize,
    },

    #[error("not enough samples: {what} needs at least {required}, have {available}")]
    InsufficientData {
        what: &'static str,
        required: usize,
        available: usize,
    },

    #[error("index {index} out of range (length {len})")]
    OutOfRange { index: usize, len: usize },

    #[error("invalid QP: {0}")]
    InvalidProblem(String),

    #[error("controller problem infeasible before solving: {0}")]
    InfeasibleByConstruction(String),

    #[error("controller infeasible at step {step}: solver status {status:?} after {iterations} iterations (primal residual {primal_residual:.3e}, dual residual {dual_residual:.3e})")]
    Infeasible {
        step: usize,
        status: QpStatus,
        iterations: usize,
        primal_residual: f64,
        dual_residual: f64,
    },

    #[error("{stage} stage failed")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn dim(op: &'static str, expected: usize, got: usize) -> Self {
        Error::Dimension { op, expected, got }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps an error with the name of the experiment stage that produced it.
    pub fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True for the solver-side infeasibility signal of a controller step.
    pub fn is_infeasible(&self) -> bool {
        match self {
            Error::Infeasible { .. } | Error::InfeasibleByConstruction(_) => true,
            Error::Stage { source, .. } => source.is_infeasible(),
            _ => false,
        }
    }
}
