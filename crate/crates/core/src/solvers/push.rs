//! Gauss–Southwell push baseline for the same correction system as the RWR
//! update: `d = r + α P̃ᵀ d`, with `pr̃ = pr + d`.
//!
//! Each push moves the largest residual entry into the estimate and spreads
//! `α r_u` over the neighbors of `u`, costing one message per incident edge.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::graph::{transition_delta_apply, Graph, NodeId};
use crate::ledger::MessageLedger;
use crate::vector::{check_len, ScoreVector};

pub const DEFAULT_MAX_PUSHES: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    magnitude: f64,
    node: NodeId,
}

impl Eq for Entry {}

impl Ord for Entry {
    // Largest magnitude first, ties to the smallest id.
    fn cmp(&self, other: &Self) -> Ordering {
        self.magnitude
            .total_cmp(&other.magnitude)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Resumable push state, so thresholds can be swept in decreasing order
/// without repeating work.
#[derive(Debug, Clone)]
pub struct PushState {
    base: Vec<f64>,
    correction: Vec<f64>,
    residual: Vec<f64>,
    alpha: f64,
    heap: BinaryHeap<Entry>,
    pushes: u64,
    messages: u64,
}

impl PushState {
    pub fn new(g_old: &Graph, g_new: &Graph, alpha: f64, pr_old: &ScoreVector) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        check_len(g_old.num_nodes(), pr_old.len())?;
        let mut residual = transition_delta_apply(g_old, g_new, pr_old)?.into_vec();
        residual.iter_mut().for_each(|v| *v *= alpha);
        let heap = residual
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(node, v)| Entry {
                magnitude: v.abs(),
                node,
            })
            .collect();
        Ok(PushState {
            base: pr_old.as_slice().to_vec(),
            correction: vec![0.0; residual.len()],
            residual,
            alpha,
            heap,
            pushes: 0,
            messages: 0,
        })
    }

    pub fn residual(&self) -> &[f64] {
        &self.residual
    }

    pub fn pushes(&self) -> u64 {
        self.pushes
    }

    /// Messages spent over all pushes so far.
    pub fn messages(&self) -> u64 {
        self.messages
    }

    /// Current estimate of the updated scores.
    pub fn estimate(&self) -> ScoreVector {
        ScoreVector::new(
            self.base
                .iter()
                .zip(&self.correction)
                .map(|(b, c)| b + c)
                .collect(),
        )
    }

    /// Largest residual magnitude.
    pub fn max_residual(&mut self) -> f64 {
        self.clean_top();
        self.heap.peek().map_or(0.0, |e| e.magnitude)
    }

    fn clean_top(&mut self) {
        while let Some(top) = self.heap.peek() {
            if top.magnitude == self.residual[top.node].abs() && top.magnitude > 0.0 {
                return;
            }
            self.heap.pop();
        }
    }

    /// Pushes the largest residual entry; `None` when the residual is zero.
    pub fn step(&mut self, g_new: &Graph) -> Option<NodeId> {
        self.clean_top();
        let Entry { node: u, .. } = self.heap.pop()?;
        let ru = self.residual[u];
        self.residual[u] = 0.0;
        self.correction[u] += ru;
        self.pushes += 1;
        if !g_new.is_isolated(u) {
            let share = self.alpha * ru / g_new.degree(u);
            for &(v, w) in g_new.neighbors(u) {
                self.residual[v] += share * w;
                let magnitude = self.residual[v].abs();
                if magnitude > 0.0 {
                    self.heap.push(Entry { magnitude, node: v });
                }
            }
            self.messages += g_new.degree_count(u) as u64;
        }
        Some(u)
    }

    /// Pushes until every residual entry is below `epsilon` in magnitude,
    /// recording this run's messages as one ledger entry.
    pub fn run(
        &mut self,
        g_new: &Graph,
        epsilon: f64,
        ledger: &mut MessageLedger,
        max_pushes: u64,
    ) -> Result<()> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        let before = self.messages;
        let result = loop {
            if self.max_residual() < epsilon {
                break Ok(());
            }
            if self.pushes >= max_pushes {
                break Err(Error::PushLimit(max_pushes));
            }
            self.step(g_new);
        };
        ledger.record(self.messages - before);
        result
    }
}

pub fn push_update(
    g_old: &Graph,
    g_new: &Graph,
    alpha: f64,
    pr_old: &ScoreVector,
    epsilon: f64,
    ledger: &mut MessageLedger,
    max_pushes: u64,
) -> Result<ScoreVector> {
    let mut state = PushState::new(g_old, g_new, alpha, pr_old)?;
    state.run(g_new, epsilon, ledger, max_pushes)?;
    Ok(state.estimate())
}
