//! Sparse undirected weighted graphs and the deltas between snapshots.
//!
//! Node ids are dense integers `0..N`. Adjacency rows are sorted by neighbor id
//! and never store zero weights. Nodes without edges are isolated: their degree
//! and inverse degree are both zero.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::vector::{check_len, ScoreVector};

pub type NodeId = usize;

/// Weights whose magnitude falls below this fraction of the operands after an
/// update are treated as exact cancellation and removed.
const CANCELLATION_RTOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Graph {
    adjacency: Vec<Vec<(NodeId, f64)>>,
    degrees: Vec<f64>,
    num_edges: usize,
}

/// Edge sets and weights must match; cached degrees are not compared.
impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.adjacency == other.adjacency
    }
}

/// Signed edge-weight changes between two snapshots.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GraphDelta {
    changes: Vec<(NodeId, NodeId, f64)>,
    touched: BTreeSet<NodeId>,
}

impl GraphDelta {
    pub fn new(changes: Vec<(NodeId, NodeId, f64)>) -> Self {
        let touched = changes.iter().flat_map(|&(u, v, _)| [u, v]).collect();
        GraphDelta { changes, touched }
    }

    /// The delta that turns `old` into `new`.
    pub fn between(old: &Graph, new: &Graph) -> Result<Self> {
        if old.num_nodes() != new.num_nodes() {
            return Err(Error::IncompatibleGraphs(old.num_nodes(), new.num_nodes()));
        }
        let mut changes = Vec::new();
        for u in 0..old.num_nodes() {
            let (a, b) = (old.neighbors(u), new.neighbors(u));
            if a == b {
                continue;
            }
            let mut diff: BTreeMap<NodeId, f64> = BTreeMap::new();
            for &(v, w) in a.iter().filter(|(v, _)| *v >= u) {
                *diff.entry(v).or_default() -= w;
            }
            for &(v, w) in b.iter().filter(|(v, _)| *v >= u) {
                *diff.entry(v).or_default() += w;
            }
            changes.extend(
                diff.into_iter()
                    .filter(|(_, dw)| *dw != 0.0)
                    .map(|(v, dw)| (u, v, dw)),
            );
        }
        Ok(GraphDelta::new(changes))
    }

    pub fn changes(&self) -> &[(NodeId, NodeId, f64)] {
        &self.changes
    }

    pub fn touched(&self) -> &BTreeSet<NodeId> {
        &self.touched
    }

    pub fn len(&self) -> usize {
        self.changes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.changes.is_empty()
    }

    pub fn negated(&self) -> GraphDelta {
        GraphDelta {
            changes: self.changes.iter().map(|&(u, v, w)| (u, v, -w)).collect(),
            touched: self.touched.clone(),
        }
    }

    /// Changes summed per undirected edge, keyed by `(min, max)`.
    fn aggregated(&self) -> BTreeMap<(NodeId, NodeId), f64> {
        let mut agg = BTreeMap::new();
        for &(u, v, dw) in &self.changes {
            *agg.entry((u.min(v), u.max(v))).or_insert(0.0) += dw;
        }
        agg
    }
}

/// Builds a symmetric graph. Duplicate undirected edges are merged by summing
/// their weights; zero weights are dropped.
pub fn build_graph(edges: &[(NodeId, NodeId, f64)], num_nodes: usize) -> Result<Graph> {
    let mut adjacency: Vec<Vec<(NodeId, f64)>> = vec![Vec::new(); num_nodes];
    for &(u, v, w) in edges {
        for id in [u, v] {
            if id >= num_nodes {
                return Err(Error::NodeOutOfRange { id, num_nodes });
            }
        }
        if !w.is_finite() || w < 0.0 {
            return Err(Error::InvalidWeight { u, v, weight: w });
        }
        if w == 0.0 {
            continue;
        }
        adjacency[u].push((v, w));
        if u != v {
            adjacency[v].push((u, w));
        }
    }
    for row in &mut adjacency {
        row.sort_by_key(|&(v, _)| v);
        row.dedup_by(|next, kept| {
            if next.0 == kept.0 {
                kept.1 += next.1;
                true
            } else {
                false
            }
        });
    }
    Ok(Graph::from_rows(adjacency))
}

impl Graph {
    fn from_rows(adjacency: Vec<Vec<(NodeId, f64)>>) -> Graph {
        let degrees = adjacency.iter().map(|row| row_sum(row)).collect();
        let num_edges = count_edges(&adjacency);
        Graph {
            adjacency,
            degrees,
            num_edges,
        }
    }

    /// A graph of `n` isolated nodes.
    pub fn empty(n: usize) -> Graph {
        Graph::from_rows(vec![Vec::new(); n])
    }

    pub fn num_nodes(&self) -> usize {
        self.adjacency.len()
    }

    /// Number of undirected edges, self-loops included once.
    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn neighbors(&self, u: NodeId) -> &[(NodeId, f64)] {
        &self.adjacency[u]
    }

    pub fn degree(&self, u: NodeId) -> f64 {
        self.degrees[u]
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// Number of incident edges (not their weight).
    pub fn degree_count(&self, u: NodeId) -> usize {
        self.adjacency[u].len()
    }

    pub fn is_isolated(&self, u: NodeId) -> bool {
        self.adjacency[u].is_empty()
    }

    pub fn weight(&self, u: NodeId, v: NodeId) -> f64 {
        match self.adjacency[u].binary_search_by_key(&v, |&(n, _)| n) {
            Ok(i) => self.adjacency[u][i].1,
            Err(_) => 0.0,
        }
    }

    /// Each undirected edge once as `(u, v, w)` with `u <= v`.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(u, row)| {
            row.iter()
                .filter(move |&&(v, _)| v >= u)
                .map(move |&(v, w)| (u, v, w))
        })
    }

    /// Degrees recomputed from the adjacency, for cross-checking the cache.
    pub fn recompute_degrees(&self) -> Vec<f64> {
        self.adjacency.iter().map(|row| row_sum(row)).collect()
    }

    /// `nodes` together with all their neighbors.
    pub fn closed_neighborhood<'a>(
        &self,
        nodes: impl IntoIterator<Item = &'a NodeId>,
    ) -> BTreeSet<NodeId> {
        let mut out = BTreeSet::new();
        for &u in nodes {
            out.insert(u);
            out.extend(self.adjacency[u].iter().map(|&(v, _)| v));
        }
        out
    }

    /// Nodes whose adjacency row differs between `self` and `other`.
    pub fn changed_nodes(&self, other: &Graph) -> Result<BTreeSet<NodeId>> {
        if self.num_nodes() != other.num_nodes() {
            return Err(Error::IncompatibleGraphs(self.num_nodes(), other.num_nodes()));
        }
        Ok((0..self.num_nodes())
            .filter(|&u| self.adjacency[u] != other.adjacency[u])
            .collect())
    }

    /// Returns the evolved graph; `self` is left untouched. Only the touched
    /// rows are rebuilt and only their degrees are recomputed.
    pub fn apply_delta(&self, delta: &GraphDelta) -> Result<Graph> {
        let n = self.num_nodes();
        let mut adjacency = self.adjacency.clone();
        let mut num_edges = self.num_edges as isize;
        for ((u, v), dw) in delta.aggregated() {
            for id in [u, v] {
                if id >= n {
                    return Err(Error::NodeOutOfRange { id, num_nodes: n });
                }
            }
            if !dw.is_finite() {
                return Err(Error::InvalidWeight { u, v, weight: dw });
            }
            let old = self.weight(u, v);
            let mut new = old + dw;
            if new.abs() <= CANCELLATION_RTOL * old.abs().max(dw.abs()) {
                new = 0.0;
            }
            if new < 0.0 {
                return Err(Error::NegativeWeight { u, v, weight: new });
            }
            match (old > 0.0, new > 0.0) {
                (false, true) => num_edges += 1,
                (true, false) => num_edges -= 1,
                _ => {}
            }
            set_entry(&mut adjacency[u], v, new);
            if u != v {
                set_entry(&mut adjacency[v], u, new);
            }
        }
        let mut degrees = self.degrees.clone();
        for &u in delta.touched() {
            degrees[u] = row_sum(&adjacency[u]);
        }
        Ok(Graph {
            adjacency,
            degrees,
            num_edges: num_edges as usize,
        })
    }
}

fn set_entry(row: &mut Vec<(NodeId, f64)>, v: NodeId, w: f64) {
    match row.binary_search_by_key(&v, |&(n, _)| n) {
        Ok(i) if w > 0.0 => row[i].1 = w,
        Ok(i) => {
            row.remove(i);
        }
        Err(i) if w > 0.0 => row.insert(i, (v, w)),
        Err(_) => {}
    }
}

fn row_sum(row: &[(NodeId, f64)]) -> f64 {
    row.iter().map(|&(_, w)| w).sum()
}

fn count_edges(adjacency: &[Vec<(NodeId, f64)>]) -> usize {
    adjacency
        .iter()
        .enumerate()
        .map(|(u, row)| row.iter().filter(|&&(v, _)| v >= u).count())
        .sum()
}

/// `Pᵀx = W D⁻¹ x`, i.e. `(Pᵀx)_u = Σ_{v~u} x_v W_uv / d_v`, with `1/d_v = 0`
/// for isolated nodes.
pub fn transition_transpose_apply(g: &Graph, x: &ScoreVector) -> Result<ScoreVector> {
    x.check_len(g.num_nodes())?;
    let mut out = vec![0.0; g.num_nodes()];
    scatter_transition(g, x.as_slice(), 1.0, &mut out);
    Ok(ScoreVector::new(out))
}

/// `out += scale · Pᵀx`, visiting only the nonzero entries of `x`.
pub(crate) fn scatter_transition(g: &Graph, x: &[f64], scale: f64, out: &mut [f64]) {
    for (v, &xv) in x.iter().enumerate() {
        if xv == 0.0 || g.is_isolated(v) {
            continue;
        }
        let share = scale * xv / g.degrees[v];
        for &(u, w) in &g.adjacency[v] {
            out[u] += w * share;
        }
    }
}

/// Row `u` of `Pᵀx` as a gather over the neighbors of `u`.
pub(crate) fn transition_row(g: &Graph, u: NodeId, x: &[f64]) -> f64 {
    g.adjacency[u]
        .iter()
        .map(|&(v, w)| w * x[v] / g.degrees[v])
        .sum()
}

/// `(P̃ᵀ − Pᵀ)x` evaluated only on the rows that can differ: the changed nodes
/// and their neighbors in either graph. Every other entry is exactly zero.
pub fn transition_delta_apply(old: &Graph, new: &Graph, x: &ScoreVector) -> Result<ScoreVector> {
    let n = old.num_nodes();
    if new.num_nodes() != n {
        return Err(Error::IncompatibleGraphs(n, new.num_nodes()));
    }
    check_len(n, x.len())?;
    let changed = old.changed_nodes(new)?;
    let mut rows = old.closed_neighborhood(&changed);
    rows.extend(new.closed_neighborhood(&changed));
    let mut out = vec![0.0; n];
    for u in rows {
        out[u] = transition_row(new, u, x.as_slice()) - transition_row(old, u, x.as_slice());
    }
    Ok(ScoreVector::new(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn path3() -> Graph {
        build_graph(&[(0, 1, 1.0), (1, 2, 1.0)], 3).unwrap()
    }

    #[test]
    fn build_examples() {
        let g = build_graph(&[(0, 1, 1.0)], 2).unwrap();
        assert_eq!(g.degrees(), &[1.0, 1.0]);
        assert_eq!(path3().degrees(), &[1.0, 2.0, 1.0]);
        let g = build_graph(&[(0, 1, 2.0), (1, 0, 3.0)], 2).unwrap();
        assert_eq!(g.weight(0, 1), 5.0);
        assert_eq!(g.weight(1, 0), 5.0);
        assert_eq!(g.degrees(), &[5.0, 5.0]);
        assert_eq!(g.num_edges(), 1);
    }

    #[test]
    fn build_errors() {
        assert!(matches!(
            build_graph(&[(0, 3, 1.0)], 3),
            Err(Error::NodeOutOfRange { id: 3, .. })
        ));
        assert!(matches!(
            build_graph(&[(0, 1, -1.0)], 3),
            Err(Error::InvalidWeight { .. })
        ));
    }

    #[test]
    fn self_loop_counts_once() {
        let g = build_graph(&[(0, 0, 2.0), (0, 1, 1.0)], 2).unwrap();
        assert_eq!(g.degree(0), 3.0);
        assert_eq!(g.degree_count(0), 2);
        assert_eq!(g.num_edges(), 2);
    }

    #[test]
    fn delta_examples() {
        let p = path3();
        let tri = p.apply_delta(&GraphDelta::new(vec![(0, 2, 1.0)])).unwrap();
        assert_eq!(tri.degrees(), &[2.0, 2.0, 2.0]);
        assert_eq!(tri.num_edges(), 3);
        let back = tri.apply_delta(&GraphDelta::new(vec![(0, 2, -1.0)])).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.num_edges(), 2);
        let cut = p.apply_delta(&GraphDelta::new(vec![(0, 1, -1.0)])).unwrap();
        assert_eq!(cut.degrees(), &[0.0, 1.0, 1.0]);
        assert!(cut.is_isolated(0));
        // the original is unmodified
        assert_eq!(p.degrees(), &[1.0, 2.0, 1.0]);
    }

    #[test]
    fn delta_rejects_negative_weight() {
        let err = path3()
            .apply_delta(&GraphDelta::new(vec![(0, 1, -2.0)]))
            .unwrap_err();
        assert!(matches!(err, Error::NegativeWeight { .. }));
    }

    #[test]
    fn delta_touched_is_endpoints() {
        let d = GraphDelta::new(vec![(4, 1, 1.0), (1, 7, -0.5)]);
        assert_eq!(d.touched().iter().copied().collect::<Vec<_>>(), vec![1, 4, 7]);
    }

    #[test]
    fn delta_between_roundtrip() {
        let p = path3();
        let tri = build_graph(&[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)], 3).unwrap();
        let d = GraphDelta::between(&p, &tri).unwrap();
        assert_eq!(d.changes(), &[(0, 2, 1.0)]);
        assert_eq!(p.apply_delta(&d).unwrap(), tri);
    }

    #[test]
    fn transition_examples() {
        let g = build_graph(&[(0, 1, 1.0)], 2).unwrap();
        let y = transition_transpose_apply(&g, &ScoreVector::new(vec![1.0, 0.0])).unwrap();
        assert_eq!(y.as_slice(), &[0.0, 1.0]);
        let y = transition_transpose_apply(&path3(), &ScoreVector::new(vec![0.0, 1.0, 0.0]))
            .unwrap();
        assert_eq!(y.as_slice(), &[0.5, 0.0, 0.5]);
        let g = build_graph(&[(1, 2, 1.0)], 3).unwrap();
        let y = transition_transpose_apply(&g, &ScoreVector::new(vec![1.0, 0.0, 0.0])).unwrap();
        assert_eq!(y.as_slice(), &[0.0, 0.0, 0.0]);
        assert!(transition_transpose_apply(&g, &ScoreVector::zeros(2)).is_err());
    }

    fn dense_transition_transpose(g: &Graph, x: &[f64]) -> Vec<f64> {
        let n = g.num_nodes();
        let mut w = vec![vec![0.0; n]; n];
        for (u, v, wt) in g.edges() {
            w[u][v] = wt;
            w[v][u] = wt;
        }
        let d: Vec<f64> = (0..n).map(|i| w[i].iter().sum()).collect();
        (0..n)
            .map(|u| {
                (0..n)
                    .filter(|&v| d[v] > 0.0)
                    .map(|v| w[u][v] * x[v] / d[v])
                    .sum()
            })
            .collect()
    }

    fn arb_graph(max_n: usize) -> impl Strategy<Value = (usize, Vec<(usize, usize, f64)>)> {
        (2..max_n).prop_flat_map(|n| {
            let edge = (0..n, 0..n, 1u32..8).prop_map(|(u, v, w)| (u, v, w as f64 * 0.25));
            (Just(n), prop::collection::vec(edge, 0..3 * n))
        })
    }

    proptest! {
        #[test]
        fn delta_then_negated_is_identity((n, edges) in arb_graph(30), picks in prop::collection::vec((0usize..1000, 0usize..1000, 1u32..5), 1..6)) {
            let g = build_graph(&edges, n).unwrap();
            let changes: Vec<_> = picks.iter().map(|&(a, b, w)| (a % n, b % n, w as f64 * 0.5)).collect();
            let d = GraphDelta::new(changes);
            let g2 = g.apply_delta(&d).unwrap();
            let back = g2.apply_delta(&d.negated()).unwrap();
            prop_assert_eq!(&back, &g);
            prop_assert_eq!(back.degrees(), &g.recompute_degrees()[..]);
            prop_assert_eq!(back.num_edges(), g.num_edges());
            prop_assert_eq!(g2.degrees(), &g2.recompute_degrees()[..]);
        }

        #[test]
        fn transition_matches_dense((n, edges) in arb_graph(50), seed in prop::collection::vec(-1.0f64..1.0, 50)) {
            let g = build_graph(&edges, n).unwrap();
            let x = ScoreVector::new(seed[..n].to_vec());
            let fast = transition_transpose_apply(&g, &x).unwrap();
            let slow = dense_transition_transpose(&g, x.as_slice());
            for (a, b) in fast.iter().zip(&slow) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }

        #[test]
        fn transition_preserves_mass_off_isolated((n, edges) in arb_graph(40), raw in prop::collection::vec(0.0f64..1.0, 40)) {
            let g = build_graph(&edges, n).unwrap();
            let mut x: Vec<f64> = (0..n).map(|i| if g.is_isolated(i) { 0.0 } else { raw[i] }).collect();
            let total: f64 = x.iter().sum();
            prop_assume!(total > 0.0);
            x.iter_mut().for_each(|v| *v /= total);
            let y = transition_transpose_apply(&g, &ScoreVector::new(x)).unwrap();
            prop_assert!((y.sum() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn transition_delta_matches_difference((n, edges) in arb_graph(30), picks in prop::collection::vec((0usize..1000, 0usize..1000), 1..4), seed in prop::collection::vec(-1.0f64..1.0, 30)) {
            let g = build_graph(&edges, n).unwrap();
            let d = GraphDelta::new(picks.iter().map(|&(a, b)| (a % n, b % n, 1.0)).collect());
            let g2 = g.apply_delta(&d).unwrap();
            let x = ScoreVector::new(seed[..n].to_vec());
            let local = transition_delta_apply(&g, &g2, &x).unwrap();
            let a = transition_transpose_apply(&g2, &x).unwrap();
            let b = transition_transpose_apply(&g, &x).unwrap();
            let allowed = g.closed_neighborhood(d.touched());
            let allowed2 = g2.closed_neighborhood(d.touched());
            for u in 0..n {
                prop_assert!((local[u] - (a[u] - b[u])).abs() < 1e-12);
                if local[u] != 0.0 {
                    prop_assert!(allowed.contains(&u) || allowed2.contains(&u));
                }
            }
        }
    }
}
