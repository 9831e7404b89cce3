//! Messages needed to reach an error target as the perturbation grows.

use std::ops::ControlFlow;

use rayon::prelude::*;
use serde::Serialize;

use crate::chebyshev::Progress;
use crate::error::{Error, Result};
use crate::ledger::MessageLedger;
use crate::solvers::{reference_solve, solve_scratch_observed, update_local_bound};
use crate::vector::{relative_error_slice, ScoreVector};

use super::{check_target, mean, Workload};

#[derive(Debug, Clone, PartialEq)]
pub struct Exp2Config {
    /// Snapshot holding the old scores.
    pub start: usize,
    /// Perturbation sizes as fractions of the edge count at `start`.
    pub sizes: Vec<f64>,
    pub target: f64,
    pub max_order: usize,
}

impl Exp2Config {
    pub fn default_sizes() -> Vec<f64> {
        vec![0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exp2Row {
    pub perturbation_edges: usize,
    /// Snapshot the scores are updated to.
    pub snapshot: usize,
    pub messages_update: f64,
    pub messages_scratch: f64,
    /// Set on the first size where the update costs at least as much as scratch.
    pub crossover: bool,
}

/// Messages spent when the error first drops to `target`.
fn until_target<'a>(
    target: f64,
    truth: &'a ScoreVector,
    hit: &'a mut Option<u64>,
) -> impl FnMut(Progress<'_>) -> ControlFlow<()> + 'a {
    move |p| {
        let err = relative_error_slice(p.estimate, truth.as_slice()).unwrap_or(f64::NAN);
        if err <= target {
            *hit = Some(p.messages);
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    }
}

fn reached(hit: Option<u64>, what: &str, cfg: &Exp2Config) -> Result<u64> {
    hit.ok_or_else(|| {
        Error::NotConverged(format!(
            "{what} did not reach {:e} within order {}",
            cfg.target, cfg.max_order
        ))
    })
}

pub fn run_exp2(work: &Workload, cfg: &Exp2Config) -> Result<Vec<Exp2Row>> {
    check_target(cfg.target)?;
    work.check_window(cfg.start, cfg.start)?;
    if cfg.sizes.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::InvalidParameter("perturbation sizes must be positive".into()));
    }
    let g_old = work.snapshot(cfg.start)?;
    let seeds = work.seed_nodes(&g_old)?;
    let n = g_old.num_nodes();
    let count = work.stream.snapshot_count();

    // Event counts per snapshot, to find where each size is first reached.
    let per_snapshot = work.stream.events_per_snapshot();
    let mut rows: Vec<Exp2Row> = Vec::new();
    for &fraction in &cfg.sizes {
        let wanted = ((fraction * g_old.num_edges() as f64).ceil() as usize).max(1);
        let mut seen = 0;
        let mut snapshot = None;
        for k in cfg.start + 1..=count {
            seen += per_snapshot[k - 1];
            if seen >= wanted {
                snapshot = Some(k);
                break;
            }
        }
        let Some(snapshot) = snapshot else {
            log::warn!("exp2: stream ends before {wanted} new edges, stopping");
            break;
        };
        let g_new = work.snapshot(snapshot)?;
        let edges = work.stream.delta_between(cfg.start, snapshot)?.len();
        let (spec_old, spec_new) = work.operator_pair(&g_old, &g_new)?;
        let costs: Vec<(u64, u64)> = seeds
            .par_iter()
            .map(|&seed| -> Result<(u64, u64)> {
                let y = ScoreVector::indicator(n, seed)?;
                let pr_old = reference_solve(&g_old, &spec_old, work.mu, &y, work.dense_limit)?;
                let truth = reference_solve(&g_new, &spec_new, work.mu, &y, work.dense_limit)?;
                let mut hit = None;
                update_local_bound(
                    &g_old,
                    &g_new,
                    &spec_old,
                    &spec_new,
                    work.mu,
                    &pr_old,
                    cfg.max_order,
                    work.tau,
                    until_target(cfg.target, &truth, &mut hit),
                )?;
                let update = reached(hit, "update", cfg)?;
                let mut hit = None;
                let mut ledger = MessageLedger::new(work.tau);
                solve_scratch_observed(
                    &g_new,
                    &spec_new,
                    work.mu,
                    &y,
                    cfg.max_order,
                    &mut ledger,
                    until_target(cfg.target, &truth, &mut hit),
                )?;
                Ok((update, reached(hit, "scratch", cfg)?))
            })
            .collect::<Result<_>>()?;
        let update: Vec<f64> = costs.iter().map(|c| c.0 as f64).collect();
        let scratch: Vec<f64> = costs.iter().map(|c| c.1 as f64).collect();
        rows.push(Exp2Row {
            perturbation_edges: edges,
            snapshot,
            messages_update: mean(&update),
            messages_scratch: mean(&scratch),
            crossover: false,
        });
    }
    if let Some(row) = rows.iter_mut().find(|r| r.messages_update >= r.messages_scratch) {
        row.crossover = true;
    }
    Ok(rows)
}
