//! Experiment harness: workloads, seed sampling and the row types emitted
//! by the command-line tool.

mod exp1;
mod exp2;
mod exp3;
mod exp4;
mod solve;

pub use exp1::{run_exp1, Exp1Config, Exp1Row};
pub use exp2::{run_exp2, Exp2Config, Exp2Row};
pub use exp3::{run_exp3, Exp3Config, Exp3Row};
pub use exp4::{run_exp4, Exp4Config, Exp4Row};
pub use solve::{run_solve, run_update, SolveConfig, SolveOutput, SolveRow, Stop};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::ingest::SnapshotStream;
use crate::operators::{
    make_operator_with, OperatorKind, OperatorSpec, PowerIterationConfig, DEFAULT_DENSE_LIMIT,
};

/// Lowest error target the harness accepts.
pub const ERROR_FLOOR: f64 = 1e-14;

/// Settings shared by every command.
#[derive(Debug, Clone)]
pub struct Workload {
    pub stream: SnapshotStream,
    pub kind: OperatorKind,
    pub mu: f64,
    /// Ledger activity threshold.
    pub tau: f64,
    pub dense_limit: usize,
    /// Spectral estimation for kinds without an analytic bound.
    pub power: PowerIterationConfig,
    /// Number of restart vectors (seed realizations).
    pub seeds: usize,
    pub rng_seed: u64,
    /// Fixed seed node instead of random draws.
    pub seed_node: Option<NodeId>,
}

impl Workload {
    pub fn new(stream: SnapshotStream, rng_seed: u64) -> Self {
        Workload {
            stream,
            kind: OperatorKind::Standard,
            mu: 1.0,
            tau: 0.0,
            dense_limit: DEFAULT_DENSE_LIMIT,
            power: PowerIterationConfig::default(),
            seeds: 20,
            rng_seed,
            seed_node: None,
        }
    }

    pub fn snapshot(&self, k: usize) -> Result<Graph> {
        self.stream.snapshot_graph(k)
    }

    /// Seed nodes drawn without replacement among nodes with edges in `g`.
    /// With a fixed seed node, that node alone.
    pub fn seed_nodes(&self, g: &Graph) -> Result<Vec<NodeId>> {
        if let Some(node) = self.seed_node {
            if node >= g.num_nodes() {
                return Err(Error::NodeOutOfRange {
                    id: node,
                    num_nodes: g.num_nodes(),
                });
            }
            return Ok(vec![node]);
        }
        if self.seeds == 0 {
            return Err(Error::InvalidParameter("seed count must be positive".into()));
        }
        let candidates: Vec<NodeId> = (0..g.num_nodes()).filter(|&u| !g.is_isolated(u)).collect();
        if candidates.is_empty() {
            return Err(Error::InvalidParameter("graph has no edges to seed from".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        let count = self.seeds.min(candidates.len());
        let mut picks: Vec<NodeId> = sample(&mut rng, candidates.len(), count)
            .into_iter()
            .map(|i| candidates[i])
            .collect();
        // Repeat draws only when the graph has fewer candidates than seeds.
        while picks.len() < self.seeds {
            picks.push(picks[picks.len() % count]);
        }
        Ok(picks)
    }

    pub fn operator(&self, g: &Graph) -> Result<OperatorSpec> {
        make_operator_with(self.kind, g, self.dense_limit, self.power)
    }

    /// Operators for both graphs sharing one spectral bound that covers both.
    pub fn operator_pair(&self, g_old: &Graph, g_new: &Graph) -> Result<(OperatorSpec, OperatorSpec)> {
        let old = self.operator(g_old)?;
        let new = self.operator(g_new)?;
        let bound = old.lambda_max().max(new.lambda_max());
        Ok((old.with_lambda_max(bound)?, new.with_lambda_max(bound)?))
    }

    fn check_window(&self, old: usize, new: usize) -> Result<()> {
        let count = self.stream.snapshot_count();
        for index in [old, new] {
            if index == 0 || index > count {
                return Err(Error::SnapshotOutOfRange { index, count });
            }
        }
        if old > new {
            return Err(Error::InvalidParameter(format!(
                "window start {old} is after its end {new}"
            )));
        }
        Ok(())
    }
}

pub(crate) fn check_target(target: f64) -> Result<()> {
    if !(target >= ERROR_FLOOR && target < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "error target {target:e} must lie in [{ERROR_FLOOR:e}, 1)"
        )));
    }
    Ok(())
}

/// Orders `0..=10`, then growing by a quarter each step up to `max_order`.
pub fn order_grid(max_order: usize) -> Vec<usize> {
    let mut grid: Vec<usize> = (0..=max_order.min(10)).collect();
    let mut k = 10;
    while k < max_order {
        k = ((k as f64 * 1.25).ceil() as usize).min(max_order);
        grid.push(k);
    }
    grid
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard error of the mean; zero for a single sample.
pub(crate) fn stderr(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let (mx, my) = (mean(xs), mean(ys));
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Event;

    fn star() -> SnapshotStream {
        let events = (1..6).map(|v| Event::new(0, v, 1.0, 0)).collect();
        SnapshotStream::from_events(8, &[], events).unwrap()
    }

    #[test]
    fn grid_shape() {
        assert_eq!(order_grid(3), vec![0, 1, 2, 3]);
        assert_eq!(order_grid(20), vec![0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 13, 17, 20]);
    }

    #[test]
    fn statistics() {
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert!((stderr(&[1.0, 2.0, 3.0]) - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(stderr(&[4.0]), 0.0);
        assert!((slope(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap() - 2.0).abs() < 1e-15);
        assert!(slope(&[1.0, 1.0], &[0.0, 1.0]).is_none());
    }

    #[test]
    fn seed_nodes_avoid_isolated_and_repeat() {
        let mut w = Workload::new(star(), 3);
        w.seeds = 4;
        let g = w.snapshot(1).unwrap();
        let picks = w.seed_nodes(&g).unwrap();
        assert_eq!(picks.len(), 4);
        assert!(picks.iter().all(|&u| u < 6));
        assert_eq!(picks, w.seed_nodes(&g).unwrap());
        w.seeds = 9;
        assert_eq!(w.seed_nodes(&g).unwrap().len(), 9);
        w.seed_node = Some(7);
        assert_eq!(w.seed_nodes(&g).unwrap(), vec![7]);
        w.seed_node = Some(8);
        assert!(w.seed_nodes(&g).is_err());
    }

    #[test]
    fn targets_and_windows() {
        assert!(check_target(1e-10).is_ok());
        assert!(check_target(1e-15).is_err());
        assert!(check_target(1.5).is_err());
        let w = Workload::new(star(), 0);
        assert!(w.check_window(1, 1).is_ok());
        assert!(w.check_window(0, 1).is_err());
        assert!(w.check_window(1, 2).is_err());
    }
}
