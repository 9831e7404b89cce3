//! Single solves and updates with per-order error traces.

use std::ops::ControlFlow;

use serde::Serialize;

use crate::chebyshev::Progress;
use crate::error::{Error, Result};
use crate::ledger::MessageLedger;
use crate::solvers::{reference_solve, solve_scratch_observed, update_local_bound};
use crate::vector::{relative_error_slice, ScoreVector};

use super::{check_target, Workload};

/// Run length: a fixed order, or the first order reaching an error target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stop {
    Order(usize),
    Target { target: f64, max_order: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    /// Snapshot holding the old scores (updates only).
    pub old: usize,
    /// Snapshot to solve on.
    pub new: usize,
    pub stop: Stop,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveRow {
    pub order: usize,
    pub relative_error: f64,
    pub messages_total: u64,
}

#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub rows: Vec<SolveRow>,
    pub scores: ScoreVector,
}

/// Uniform restart vector over the distinct seed nodes.
fn restart_vector(work: &Workload, g: &crate::graph::Graph) -> Result<ScoreVector> {
    let mut nodes = work.seed_nodes(g)?;
    nodes.sort_unstable();
    nodes.dedup();
    let mut y = ScoreVector::zeros(g.num_nodes());
    for &u in &nodes {
        y[u] = 1.0 / nodes.len() as f64;
    }
    Ok(y)
}

fn max_order(stop: Stop) -> Result<usize> {
    match stop {
        Stop::Order(k) => Ok(k),
        Stop::Target { target, max_order } => {
            check_target(target)?;
            Ok(max_order)
        }
    }
}

/// Records one row per order and stops at the target when there is one.
fn tracer<'a>(
    stop: Stop,
    reference: &'a ScoreVector,
    rows: &'a mut Vec<SolveRow>,
) -> impl FnMut(Progress<'_>) -> ControlFlow<()> + 'a {
    move |p| {
        let relative_error =
            relative_error_slice(p.estimate, reference.as_slice()).unwrap_or(f64::NAN);
        rows.push(SolveRow {
            order: p.order,
            relative_error,
            messages_total: p.messages,
        });
        match stop {
            Stop::Target { target, .. } if relative_error <= target => ControlFlow::Break(()),
            _ => ControlFlow::Continue(()),
        }
    }
}

fn check_reached(stop: Stop, rows: &[SolveRow]) -> Result<()> {
    if let Stop::Target { target, max_order } = stop {
        if rows.last().is_none_or(|r| !(r.relative_error <= target)) {
            return Err(Error::NotConverged(format!(
                "error target {target:e} not reached by order {max_order}"
            )));
        }
    }
    Ok(())
}

/// Chebyshev solve from scratch on snapshot `cfg.new`.
pub fn run_solve(work: &Workload, cfg: &SolveConfig) -> Result<SolveOutput> {
    let order = max_order(cfg.stop)?;
    let g = work.snapshot(cfg.new)?;
    let spec = work.operator(&g)?;
    let y = restart_vector(work, &g)?;
    let reference = reference_solve(&g, &spec, work.mu, &y, work.dense_limit)?;
    let mut rows = Vec::new();
    let mut ledger = MessageLedger::new(work.tau);
    let scores = solve_scratch_observed(
        &g,
        &spec,
        work.mu,
        &y,
        order,
        &mut ledger,
        tracer(cfg.stop, &reference, &mut rows),
    )?;
    check_reached(cfg.stop, &rows)?;
    Ok(SolveOutput { rows, scores })
}

/// Local update of the exact scores on snapshot `cfg.old` to snapshot `cfg.new`.
pub fn run_update(work: &Workload, cfg: &SolveConfig) -> Result<SolveOutput> {
    let order = max_order(cfg.stop)?;
    work.check_window(cfg.old, cfg.new)?;
    let g_old = work.snapshot(cfg.old)?;
    let g_new = work.snapshot(cfg.new)?;
    let (spec_old, spec_new) = work.operator_pair(&g_old, &g_new)?;
    let y = restart_vector(work, &g_old)?;
    let pr_old = reference_solve(&g_old, &spec_old, work.mu, &y, work.dense_limit)?;
    let reference = reference_solve(&g_new, &spec_new, work.mu, &y, work.dense_limit)?;
    let mut rows = Vec::new();
    let result = update_local_bound(
        &g_old,
        &g_new,
        &spec_old,
        &spec_new,
        work.mu,
        &pr_old,
        order,
        work.tau,
        tracer(cfg.stop, &reference, &mut rows),
    )?;
    check_reached(cfg.stop, &rows)?;
    Ok(SolveOutput {
        rows,
        scores: result.scores,
    })
}
