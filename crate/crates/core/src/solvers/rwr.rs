//! Random-walk-with-restart update baseline.
//!
//! The correction `pr̃ − pr` equals `(1/(1−α)) q` where `q` solves
//! `q = (1−α) r + α P̃ᵀ q` with `r = α (P̃ᵀ − Pᵀ) pr`, found by power
//! iteration from `q = r`.

use std::ops::ControlFlow;

use crate::chebyshev::Progress;
use crate::error::{Error, Result};
use crate::graph::{scatter_transition, transition_delta_apply, Graph};
use crate::ledger::MessageLedger;
use crate::vector::{check_len, norm2, ScoreVector};

/// Safety cap on tolerance-driven runs.
pub const RWR_MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Stop once successive iterates differ by less than this in 2-norm.
    Tolerance(f64),
    /// Run exactly this many rounds.
    Iterations(usize),
}

pub fn rwr_update(
    g_old: &Graph,
    g_new: &Graph,
    alpha: f64,
    pr_old: &ScoreVector,
    stop: StopRule,
    ledger: &mut MessageLedger,
) -> Result<ScoreVector> {
    rwr_update_observed(g_old, g_new, alpha, pr_old, stop, ledger, |_| {
        ControlFlow::Continue(())
    })
}

/// As [`rwr_update`], reporting the composed estimate before the first
/// round and after every round.
pub fn rwr_update_observed(
    g_old: &Graph,
    g_new: &Graph,
    alpha: f64,
    pr_old: &ScoreVector,
    stop: StopRule,
    ledger: &mut MessageLedger,
    mut observer: impl FnMut(Progress<'_>) -> ControlFlow<()>,
) -> Result<ScoreVector> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    check_len(g_old.num_nodes(), pr_old.len())?;
    let mut r = transition_delta_apply(g_old, g_new, pr_old)?.into_vec();
    r.iter_mut().for_each(|v| *v *= alpha);

    let scale = 1.0 / (1.0 - alpha);
    let compose = |q: &[f64]| -> Vec<f64> {
        pr_old.iter().zip(q).map(|(p, v)| p + scale * v).collect()
    };
    if r.iter().all(|&v| v == 0.0) {
        return Ok(pr_old.clone());
    }

    let (limit, tolerance) = match stop {
        StopRule::Tolerance(tol) => {
            if !(tol > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "tolerance must be positive, got {tol}"
                )));
            }
            (RWR_MAX_ITERATIONS, Some(tol))
        }
        StopRule::Iterations(t) => (t, None),
    };

    let start = ledger.total();
    let mut q = r.clone();
    let estimate = compose(&q);
    let progress = Progress {
        order: 0,
        estimate: &estimate,
        messages: 0,
    };
    if observer(progress).is_break() {
        return Ok(ScoreVector::new(estimate));
    }
    for t in 1..=limit {
        ledger.record_vector(g_new, &q);
        let mut next: Vec<f64> = r.iter().map(|v| (1.0 - alpha) * v).collect();
        scatter_transition(g_new, &q, alpha, &mut next);
        let change = norm2(&next.iter().zip(&q).map(|(a, b)| a - b).collect::<Vec<_>>());
        q = next;
        let estimate = compose(&q);
        let progress = Progress {
            order: t,
            estimate: &estimate,
            messages: ledger.total() - start,
        };
        if observer(progress).is_break() {
            return Ok(ScoreVector::new(estimate));
        }
        if let Some(tol) = tolerance {
            if change < tol {
                return Ok(ScoreVector::new(estimate));
            }
        }
    }
    if tolerance.is_some() {
        return Err(Error::NotConverged(format!(
            "rwr update after {RWR_MAX_ITERATIONS} iterations"
        )));
    }
    Ok(ScoreVector::new(compose(&q)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::operators::{make_operator, mu_from_alpha, OperatorKind};
    use crate::solvers::oracle::dense_oracle;
    use crate::vector::relative_error;
    use proptest::prelude::*;

    #[test]
    fn unchanged_graph_is_identity() {
        let g = build_graph(&[(0, 1, 1.0), (1, 2, 1.0)], 3).unwrap();
        let pr = ScoreVector::new(vec![0.5, 0.3, 0.2]);
        let mut ledger = MessageLedger::new(0.0);
        let out = rwr_update(&g, &g, 0.5, &pr, StopRule::Tolerance(1e-12), &mut ledger).unwrap();
        assert_eq!(out, pr);
        assert_eq!(ledger.total(), 0);
    }

    #[test]
    fn path_to_triangle() {
        let g = build_graph(&[(0, 1, 1.0), (1, 2, 1.0)], 3).unwrap();
        let gt = build_graph(&[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)], 3).unwrap();
        let pr = ScoreVector::new(vec![7.0 / 12.0, 1.0 / 3.0, 1.0 / 12.0]);
        let mut ledger = MessageLedger::new(0.0);
        let out = rwr_update(&g, &gt, 0.5, &pr, StopRule::Tolerance(1e-15), &mut ledger).unwrap();
        for (a, b) in out.iter().zip([0.6, 0.2, 0.2]) {
            assert!((a - b).abs() < 1e-13);
        }
        assert!(rwr_update(&g, &gt, 1.0, &pr, StopRule::Iterations(1), &mut ledger).is_err());
    }

    #[test]
    fn fixed_iterations_count_rounds() {
        let g = build_graph(&[(0, 1, 1.0), (1, 2, 1.0)], 3).unwrap();
        let gt = build_graph(&[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)], 3).unwrap();
        let pr = ScoreVector::new(vec![7.0 / 12.0, 1.0 / 3.0, 1.0 / 12.0]);
        let mut ledger = MessageLedger::new(0.0);
        rwr_update(&g, &gt, 0.5, &pr, StopRule::Iterations(7), &mut ledger).unwrap();
        assert_eq!(ledger.rounds().len(), 7);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn converges_to_new_oracle(n in 4usize..40, raw in prop::collection::vec((0usize..40, 0usize..40), 4..100), extra in prop::collection::vec((0usize..40, 0usize..40), 1..5), alpha in 0.1f64..0.9) {
            let edges: Vec<_> = raw.iter().map(|&(a, b)| (a % n, b % n, 1.0)).collect();
            let mut more = edges.clone();
            more.extend(extra.iter().map(|&(a, b)| (a % n, b % n, 1.0)));
            let (g, gn) = (build_graph(&edges, n).unwrap(), build_graph(&more, n).unwrap());
            let mu = mu_from_alpha(alpha).unwrap();
            let y = ScoreVector::indicator(n, 0).unwrap();
            let spec = make_operator(OperatorKind::Standard, &g, 100).unwrap();
            let pr = dense_oracle(&g, &spec, mu, &y, 100).unwrap();
            let want = dense_oracle(&gn, &spec.rebind(&gn, 100).unwrap(), mu, &y, 100).unwrap();
            let mut ledger = MessageLedger::new(0.0);
            let got = rwr_update(&g, &gn, alpha, &pr, StopRule::Tolerance(1e-14), &mut ledger).unwrap();
            prop_assert!(relative_error(&got, &want).unwrap() < 1e-11);
        }
    }
}
