//! Local Chebyshev updates of personalized PageRank on evolving graphs.
//!
//! Scores solve `(R + μI) p = μ y` for a graph operator `R` and restart
//! vector `y`. After an edge change the new scores are recovered from the
//! old ones by expanding a residual supported near the change.

pub mod chebyshev;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod ingest;
pub mod ledger;
pub mod operators;
pub mod solvers;
pub mod synthetic;
pub mod vector;

pub use chebyshev::{cheby_apply, cheby_apply_observed, compute_coefficients, ChebyCoefficients, Progress};
pub use error::{Error, Result};
pub use graph::{build_graph, transition_delta_apply, transition_transpose_apply, Graph, GraphDelta, NodeId};
pub use ledger::{ledger_messages_for_round, MessageLedger};
pub use operators::{
    alpha_from_mu, dense_operator_matrix, make_diffusion_params, make_operator, make_operator_with,
    make_operator_with_bound, power_iteration, power_iteration_from,
    mu_from_alpha, normalized_apply, operator_apply, operator_delta_apply, DiffusionParams,
    OperatorKind, OperatorSpec, PowerIterationConfig, DEFAULT_DENSE_LIMIT,
};
pub use solvers::*;
pub use vector::{relative_error, ScoreVector};
