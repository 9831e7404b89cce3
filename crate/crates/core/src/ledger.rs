//! Message accounting for simulated synchronous rounds.
//!
//! In a round every active node transmits its current value to each of its
//! neighbors, so a round costs the sum of the active nodes' edge counts.

use crate::graph::{Graph, NodeId};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MessageLedger {
    rounds: Vec<u64>,
    tau: f64,
}

impl MessageLedger {
    /// A ledger where a node is active when `|value| > tau`.
    pub fn new(tau: f64) -> Self {
        MessageLedger {
            rounds: Vec::new(),
            tau,
        }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn rounds(&self) -> &[u64] {
        &self.rounds
    }

    pub fn total(&self) -> u64 {
        self.rounds.iter().sum()
    }

    pub fn record(&mut self, messages: u64) {
        self.rounds.push(messages);
    }

    /// Records one round in which the nodes holding `values` above the
    /// threshold transmit.
    pub fn record_vector(&mut self, g: &Graph, values: &[f64]) -> u64 {
        let count = values
            .iter()
            .enumerate()
            .filter(|(_, x)| x.abs() > self.tau)
            .map(|(u, _)| g.degree_count(u) as u64)
            .sum();
        self.rounds.push(count);
        count
    }

    /// Starts a fresh ledger with the same threshold.
    pub fn fresh(&self) -> Self {
        MessageLedger::new(self.tau)
    }
}

/// Messages sent in a round where exactly `active` transmit.
pub fn ledger_messages_for_round<'a>(g: &Graph, active: impl IntoIterator<Item = &'a NodeId>) -> u64 {
    active.into_iter().map(|&u| g.degree_count(u) as u64).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;

    #[test]
    fn round_examples() {
        let p3 = build_graph(&[(0, 1, 1.0), (1, 2, 1.0)], 3).unwrap();
        assert_eq!(ledger_messages_for_round(&p3, &[0, 1, 2]), 4);
        assert_eq!(ledger_messages_for_round(&p3, &[]), 0);
        let p5 = build_graph(&[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0)], 5).unwrap();
        assert_eq!(ledger_messages_for_round(&p5, &[0, 1]), 3);
    }

    #[test]
    fn ledger_totals_rounds() {
        let p3 = build_graph(&[(0, 1, 1.0), (1, 2, 1.0)], 3).unwrap();
        let mut l = MessageLedger::new(0.0);
        assert_eq!(l.record_vector(&p3, &[0.0, 1.0, 0.0]), 2);
        assert_eq!(l.record_vector(&p3, &[1.0, 1.0, -1e-300]), 4);
        l.record(7);
        assert_eq!(l.rounds(), &[2, 4, 7]);
        assert_eq!(l.total(), 13);
        let mut strict = MessageLedger::new(0.5);
        assert_eq!(strict.record_vector(&p3, &[0.4, 0.6, 0.0]), 2);
    }
}
