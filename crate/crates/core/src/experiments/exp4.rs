//! Tracking scores along a snapshot sequence with chained fixed-order
//! updates, against fixed-order solves from scratch.

use std::ops::ControlFlow;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::ledger::MessageLedger;
use crate::operators::OperatorSpec;
use crate::solvers::{reference_solve, solve_scratch, update_local_bound};
use crate::vector::{relative_error, ScoreVector};

use super::Workload;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exp4Config {
    pub start: usize,
    pub horizon: usize,
    pub order: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exp4Row {
    /// External id of the seed node.
    pub seed_node: u64,
    /// Steps after the start snapshot.
    pub snapshot_index: usize,
    pub rel_error_tracked: f64,
    pub rel_error_scratch_same_k: f64,
    /// Edges changed since the previous snapshot.
    pub perturbation_size: usize,
    pub num_edges: usize,
    /// The bound no longer covered the graph and this step was solved from scratch.
    pub fallback: bool,
}

pub fn run_exp4(work: &Workload, cfg: &Exp4Config) -> Result<Vec<Exp4Row>> {
    let count = work.stream.snapshot_count();
    let last = cfg.start + cfg.horizon;
    if cfg.start == 0 || last > count {
        return Err(Error::SnapshotOutOfRange {
            index: if cfg.start == 0 { 0 } else { last },
            count,
        });
    }
    let graphs: Vec<Graph> = (cfg.start..=last)
        .map(|k| work.snapshot(k))
        .collect::<Result<_>>()?;
    let seeds = work.seed_nodes(&graphs[0])?;

    // Operators on every snapshot, shared by all seeds. An update reuses the
    // previous step's bound when it still covers the new graph.
    let fresh: Vec<OperatorSpec> = graphs
        .iter()
        .map(|g| work.operator(g))
        .collect::<Result<_>>()?;
    let mut chained = vec![fresh[0].clone()];
    let mut fallback = vec![false];
    for (t, g) in graphs.iter().enumerate().skip(1) {
        let prev = chained[t - 1].clone();
        match prev.rebind_with(g, work.dense_limit, work.power) {
            Ok(spec) => {
                chained.push(spec);
                fallback.push(false);
            }
            Err(Error::LambdaMaxViolation { stored, estimated }) => {
                log::warn!(
                    "exp4 step {t}: bound {stored} below estimate {estimated}, solving from scratch"
                );
                chained.push(fresh[t].clone());
                fallback.push(true);
            }
            Err(e) => return Err(e),
        }
    }
    let perturbations: Vec<usize> = (0..=cfg.horizon)
        .map(|t| {
            if t == 0 {
                Ok(0)
            } else {
                work.stream
                    .delta_between(cfg.start + t - 1, cfg.start + t)
                    .map(|d| d.len())
            }
        })
        .collect::<Result<_>>()?;

    let per_seed: Vec<Vec<Exp4Row>> = seeds
        .par_iter()
        .map(|&seed| track(work, cfg, &graphs, &fresh, &chained, &fallback, &perturbations, seed))
        .collect::<Result<_>>()?;
    Ok(per_seed.into_iter().flatten().collect())
}

#[allow(clippy::too_many_arguments)]
fn track(
    work: &Workload,
    cfg: &Exp4Config,
    graphs: &[Graph],
    fresh: &[OperatorSpec],
    chained: &[OperatorSpec],
    fallback: &[bool],
    perturbations: &[usize],
    seed: NodeId,
) -> Result<Vec<Exp4Row>> {
    let n = graphs[0].num_nodes();
    let y = ScoreVector::indicator(n, seed)?;
    let external = work.stream.external_id(seed).unwrap_or(seed as u64);
    let mut tracked = reference_solve(&graphs[0], &fresh[0], work.mu, &y, work.dense_limit)?;
    let mut rows = Vec::with_capacity(graphs.len());
    for (t, g) in graphs.iter().enumerate() {
        let truth = if t == 0 {
            tracked.clone()
        } else {
            reference_solve(g, &fresh[t], work.mu, &y, work.dense_limit)?
        };
        if t > 0 {
            tracked = if fallback[t] {
                let mut ledger = MessageLedger::new(work.tau);
                solve_scratch(g, &chained[t], work.mu, &y, cfg.order, &mut ledger)?
            } else {
                update_local_bound(
                    &graphs[t - 1],
                    g,
                    &chained[t - 1],
                    &chained[t],
                    work.mu,
                    &tracked,
                    cfg.order,
                    work.tau,
                    |_| ControlFlow::Continue(()),
                )?
                .scores
            };
        }
        let mut ledger = MessageLedger::new(work.tau);
        let scratch = solve_scratch(g, &fresh[t], work.mu, &y, cfg.order, &mut ledger)?;
        rows.push(Exp4Row {
            seed_node: external,
            snapshot_index: t,
            rel_error_tracked: relative_error(&tracked, &truth)?,
            rel_error_scratch_same_k: relative_error(&scratch, &truth)?,
            perturbation_size: perturbations[t],
            num_edges: g.num_edges(),
            fallback: fallback[t],
        });
    }
    Ok(rows)
}
