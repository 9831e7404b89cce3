use std::path::PathBuf;

use thiserror::Error;

use crate::graph::NodeId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("node id {id} out of range for a graph with {num_nodes} nodes")]
    NodeOutOfRange { id: NodeId, num_nodes: usize },

    #[error("invalid weight {weight} on edge ({u}, {v})")]
    InvalidWeight { u: NodeId, v: NodeId, weight: f64 },

    #[error("delta drives the weight of edge ({u}, {v}) negative ({weight})")]
    NegativeWeight { u: NodeId, v: NodeId, weight: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("graphs have different node counts ({0} vs {1})")]
    IncompatibleGraphs(usize, usize),

    #[error("reference vector is identically zero")]
    ZeroReference,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{kind} operator needs a dense representation but the graph has {num_nodes} nodes (dense limit {limit})")]
    DenseLimitExceeded {
        kind: &'static str,
        num_nodes: usize,
        limit: usize,
    },

    #[error("power iteration did not converge within {iterations} iterations")]
    PowerIterationNotConverged { iterations: usize },

    #[error("{0} operator does not support localized updates")]
    NotLocalizable(&'static str),

    #[error("operators disagree: {0}")]
    OperatorMismatch(String),

    #[error("spectral bound {stored} does not cover the evolved graph (estimate {estimated})")]
    LambdaMaxViolation { stored: f64, estimated: f64 },

    #[error("operator spectrum reaches {0} < 0; the Chebyshev expansion on [0, lambda_max] does not apply")]
    NegativeSpectrum(f64),

    #[error("linear system is singular or numerically unsolvable")]
    Singular,

    #[error("iterative solver did not converge ({0})")]
    NotConverged(String),

    #[error("push did not terminate within {0} pushes")]
    PushLimit(u64),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("snapshot index {index} out of range (stream has {count} snapshots)")]
    SnapshotOutOfRange { index: usize, count: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for failures of the numerical machinery rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::PowerIterationNotConverged { .. }
                | Error::LambdaMaxViolation { .. }
                | Error::NegativeSpectrum(_)
                | Error::Singular
                | Error::NotConverged(_)
                | Error::PushLimit(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
