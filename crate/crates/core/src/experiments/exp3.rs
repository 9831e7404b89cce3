//! Messages to reach each error target for the Chebyshev update, the RWR
//! update and push.

use std::ops::ControlFlow;

use rayon::prelude::*;
use serde::Serialize;

use crate::chebyshev::Progress;
use crate::error::{Error, Result};
use crate::ledger::MessageLedger;
use crate::operators::{alpha_from_mu, OperatorKind};
use crate::solvers::{reference_solve, rwr_update_observed, update_local_bound, PushState, StopRule};
use crate::vector::{relative_error, relative_error_slice, ScoreVector};

use super::{check_target, mean, Workload};

#[derive(Debug, Clone, PartialEq)]
pub struct Exp3Config {
    pub old: usize,
    pub new: usize,
    pub targets: Vec<f64>,
    pub max_order: usize,
    /// Push guard per seed.
    pub max_pushes: u64,
}

impl Exp3Config {
    pub fn default_targets() -> Vec<f64> {
        vec![1e-1, 1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12, 1e-14]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exp3Row {
    pub method: &'static str,
    pub error_target: f64,
    /// Mean over seeds that reached the target.
    pub messages: f64,
    /// Messages relative to the RWR update at the same target.
    pub ratio_to_rwr: f64,
    /// `ok`, or why some seed stopped short of the target.
    pub status: String,
}

const METHODS: [&str; 3] = ["cheby_update", "rwr", "push"];

/// Outcome for one seed and method: messages at each target, `None` past a
/// failure, plus the failure itself.
#[derive(Debug, Clone, Default)]
struct Sweep {
    messages: Vec<Option<u64>>,
    failure: Option<String>,
}

/// Records the messages at which each target (in decreasing order) is first met.
fn recorder<'a>(
    targets: &'a [f64],
    truth: &'a ScoreVector,
    out: &'a mut Vec<Option<u64>>,
) -> impl FnMut(Progress<'_>) -> ControlFlow<()> + 'a {
    move |p| {
        let err = relative_error_slice(p.estimate, truth.as_slice()).unwrap_or(f64::NAN);
        while out.len() < targets.len() && err <= targets[out.len()] {
            out.push(Some(p.messages));
        }
        if out.len() == targets.len() {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    }
}

fn finish(mut messages: Vec<Option<u64>>, targets: &[f64], short: &str) -> Sweep {
    let failure = (messages.len() < targets.len()).then(|| short.to_string());
    messages.resize(targets.len(), None);
    Sweep { messages, failure }
}

pub fn run_exp3(work: &Workload, cfg: &Exp3Config) -> Result<Vec<Exp3Row>> {
    if work.kind != OperatorKind::Standard {
        return Err(Error::InvalidParameter(
            "exp3 compares random-walk methods and needs the standard operator".into(),
        ));
    }
    for &t in &cfg.targets {
        check_target(t)?;
    }
    work.check_window(cfg.old, cfg.new)?;
    let mut targets = cfg.targets.clone();
    targets.sort_by(|a, b| b.total_cmp(a));
    targets.dedup();

    let g_old = work.snapshot(cfg.old)?;
    let g_new = work.snapshot(cfg.new)?;
    let seeds = work.seed_nodes(&g_old)?;
    let n = g_old.num_nodes();
    let alpha = alpha_from_mu(work.mu)?;
    let (spec_old, spec_new) = work.operator_pair(&g_old, &g_new)?;

    let sweeps: Vec<[Sweep; 3]> = seeds
        .par_iter()
        .map(|&seed| -> Result<[Sweep; 3]> {
            let y = ScoreVector::indicator(n, seed)?;
            let pr_old = reference_solve(&g_old, &spec_old, work.mu, &y, work.dense_limit)?;
            let truth = reference_solve(&g_new, &spec_new, work.mu, &y, work.dense_limit)?;

            let mut hits = Vec::new();
            update_local_bound(
                &g_old,
                &g_new,
                &spec_old,
                &spec_new,
                work.mu,
                &pr_old,
                cfg.max_order,
                work.tau,
                recorder(&targets, &truth, &mut hits),
            )?;
            let cheby = finish(hits, &targets, "order limit");

            let mut hits = Vec::new();
            let mut ledger = MessageLedger::new(work.tau);
            rwr_update_observed(
                &g_old,
                &g_new,
                alpha,
                &pr_old,
                StopRule::Iterations(cfg.max_order.max(1) * 4),
                &mut ledger,
                recorder(&targets, &truth, &mut hits),
            )?;
            let rwr = finish(hits, &targets, "iteration limit");

            Ok([cheby, rwr, push_sweep(&g_old, &g_new, alpha, &pr_old, &truth, &targets, cfg)?])
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (i, &target) in targets.iter().enumerate() {
        let mut block = Vec::new();
        for (m, method) in METHODS.iter().enumerate() {
            let reached: Vec<f64> = sweeps
                .iter()
                .filter_map(|s| s[m].messages[i].map(|v| v as f64))
                .collect();
            let failures: Vec<&str> = sweeps
                .iter()
                .filter(|s| s[m].messages[i].is_none())
                .filter_map(|s| s[m].failure.as_deref())
                .collect();
            let status = match failures.first() {
                None => "ok".to_string(),
                Some(reason) => format!("{reason} ({} of {} seeds)", failures.len(), sweeps.len()),
            };
            let messages = if reached.is_empty() { f64::NAN } else { mean(&reached) };
            block.push(Exp3Row {
                method,
                error_target: target,
                messages,
                ratio_to_rwr: f64::NAN,
                status,
            });
        }
        let rwr = block[1].messages;
        for row in &mut block {
            row.ratio_to_rwr = row.messages / rwr;
        }
        rows.extend(block);
    }
    Ok(rows)
}

/// Halves the push threshold until each target is met, reusing the state.
fn push_sweep(
    g_old: &crate::graph::Graph,
    g_new: &crate::graph::Graph,
    alpha: f64,
    pr_old: &ScoreVector,
    truth: &ScoreVector,
    targets: &[f64],
    cfg: &Exp3Config,
) -> Result<Sweep> {
    let mut state = PushState::new(g_old, g_new, alpha, pr_old)?;
    let mut epsilon = state.max_residual();
    let mut ledger = MessageLedger::new(0.0);
    let mut messages = Vec::new();
    // The remaining residual bounds the error by `ε √N / (1 − α)` relative to
    // the solution, so far below the smallest target the error is rounding.
    let floor = targets.last().copied().unwrap_or(0.0) * (1.0 - alpha) * truth.norm2()
        / (truth.len() as f64).sqrt()
        * 1e-3;
    if epsilon == 0.0 {
        return Ok(Sweep {
            messages: vec![Some(0); targets.len()],
            failure: None,
        });
    }
    loop {
        let err = relative_error(&state.estimate(), truth)?;
        while messages.len() < targets.len() && err <= targets[messages.len()] {
            messages.push(Some(state.messages()));
        }
        if messages.len() == targets.len() {
            return Ok(finish(messages, targets, ""));
        }
        if epsilon < floor {
            return Ok(finish(messages, targets, "threshold floor"));
        }
        match state.run(g_new, epsilon, &mut ledger, cfg.max_pushes) {
            Ok(()) => {}
            Err(Error::PushLimit(limit)) => {
                log::warn!("push guard tripped after {limit} pushes");
                return Ok(finish(messages, targets, "push limit"));
            }
            Err(e) => return Err(e),
        }
        epsilon /= 2.0;
    }
}
