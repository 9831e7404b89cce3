//! Error against messages for the local update and for a solve from scratch
//! on the same perturbed graph.

use std::ops::ControlFlow;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::ledger::MessageLedger;
use crate::operators::OperatorKind;
use crate::solvers::{reference_solve, solve_scratch_observed, update_local_bound};
use crate::vector::{relative_error_slice, ScoreVector};

use super::{mean, order_grid, stderr, Workload};

#[derive(Debug, Clone, PartialEq)]
pub struct Exp1Config {
    pub old: usize,
    pub new: usize,
    pub max_order: usize,
    pub kinds: Vec<OperatorKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exp1Row {
    pub method: &'static str,
    pub operator: &'static str,
    pub order: usize,
    /// Mean messages spent up to this order.
    pub messages_budget: f64,
    pub mean_rel_error: f64,
    pub stderr: f64,
}

/// Per-seed trace: messages and error at every order up to the maximum.
type Trace = Vec<(u64, f64)>;

pub fn run_exp1(work: &Workload, cfg: &Exp1Config) -> Result<Vec<Exp1Row>> {
    work.check_window(cfg.old, cfg.new)?;
    let g_old = work.snapshot(cfg.old)?;
    let g_new = work.snapshot(cfg.new)?;
    let seeds = work.seed_nodes(&g_old)?;
    let n = g_old.num_nodes();
    let mut rows = Vec::new();
    for &kind in &cfg.kinds {
        let kind_work = Workload { kind, ..work.clone() };
        let (spec_old, spec_new) = kind_work.operator_pair(&g_old, &g_new)?;
        log::info!("exp1 {}: lambda_max {}", kind.name(), spec_old.lambda_max());
        let traces: Vec<(Trace, Trace)> = seeds
            .par_iter()
            .map(|&seed| -> Result<(Trace, Trace)> {
                let y = ScoreVector::indicator(n, seed)?;
                let pr_old = reference_solve(&g_old, &spec_old, work.mu, &y, work.dense_limit)?;
                let truth = reference_solve(&g_new, &spec_new, work.mu, &y, work.dense_limit)?;
                let mut scratch = Vec::with_capacity(cfg.max_order + 1);
                let mut ledger = MessageLedger::new(work.tau);
                solve_scratch_observed(&g_new, &spec_new, work.mu, &y, cfg.max_order, &mut ledger, |p| {
                    let err = relative_error_slice(p.estimate, truth.as_slice()).unwrap_or(f64::NAN);
                    scratch.push((p.messages, err));
                    ControlFlow::Continue(())
                })?;
                let mut update = Vec::with_capacity(cfg.max_order + 1);
                update_local_bound(
                    &g_old,
                    &g_new,
                    &spec_old,
                    &spec_new,
                    work.mu,
                    &pr_old,
                    cfg.max_order,
                    work.tau,
                    |p| {
                        let err = relative_error_slice(p.estimate, truth.as_slice()).unwrap_or(f64::NAN);
                        update.push((p.messages, err));
                        ControlFlow::Continue(())
                    },
                )?;
                Ok((update, scratch))
            })
            .collect::<Result<_>>()?;

        for (method, pick) in [("update", 0), ("scratch", 1)] {
            for order in order_grid(cfg.max_order) {
                let points: Vec<(u64, f64)> = traces
                    .iter()
                    .map(|t| if pick == 0 { t.0[order] } else { t.1[order] })
                    .collect();
                let messages: Vec<f64> = points.iter().map(|p| p.0 as f64).collect();
                let errors: Vec<f64> = points.iter().map(|p| p.1).collect();
                rows.push(Exp1Row {
                    method,
                    operator: kind.name(),
                    order,
                    messages_budget: mean(&messages),
                    mean_rel_error: mean(&errors),
                    stderr: stderr(&errors),
                });
            }
        }
    }
    Ok(rows)
}
