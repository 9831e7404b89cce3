//! Solvers for the PageRank system and its update after a graph change.

pub mod local;
pub mod oracle;
pub mod push;
pub mod rwr;

pub use local::{
    compute_residual, solve_scratch, solve_scratch_observed, update_local, update_local_bound,
    update_local_observed,
    warm_restart_power, warm_restart_power_observed, UpdateResult,
};
pub use oracle::{dense_oracle, reference_solve};
pub use push::{push_update, PushState, DEFAULT_MAX_PUSHES};
pub use rwr::{rwr_update, rwr_update_observed, StopRule, RWR_MAX_ITERATIONS};
