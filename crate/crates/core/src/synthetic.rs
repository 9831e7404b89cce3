//! Seeded synthetic edge streams.
//!
//! A stream starts at timestamp 0 with a base graph on the first
//! `N − N/100` nodes; the remaining nodes are isolated. It then grows one
//! edge per timestamp, as many growth edges as the base graph has edges.
//! Most growth edges densify the core; at regular intervals a late node
//! joins by attaching to the core.

use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::ingest::{Event, SnapshotStream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SyntheticModel {
    /// Preferential attachment with `m` edges per arriving node.
    PreferentialAttachment { m: usize },
    /// Random geometric graph in the unit square.
    Geometric { radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticRecipe {
    pub model: SyntheticModel,
    pub num_nodes: usize,
    pub seed: u64,
}

impl SyntheticRecipe {
    /// Parses `MODEL,N,PARAM` with `MODEL` one of `pa` or `geo`.
    pub fn parse(text: &str, seed: u64) -> Result<Self> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        let bad = || {
            Error::InvalidParameter(format!(
                "synthetic recipe must be MODEL,N,PARAM with MODEL in {{pa, geo}}, got '{text}'"
            ))
        };
        if parts.len() != 3 {
            return Err(bad());
        }
        let num_nodes = usize::from_str(parts[1]).map_err(|_| bad())?;
        let model = match parts[0] {
            "pa" => SyntheticModel::PreferentialAttachment {
                m: usize::from_str(parts[2]).map_err(|_| bad())?,
            },
            "geo" => SyntheticModel::Geometric {
                radius: f64::from_str(parts[2]).map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        let recipe = SyntheticRecipe {
            model,
            num_nodes,
            seed,
        };
        recipe.validate()?;
        Ok(recipe)
    }

    fn validate(&self) -> Result<()> {
        let ok = match self.model {
            SyntheticModel::PreferentialAttachment { m } => m >= 1 && self.core_size() > m + 1,
            SyntheticModel::Geometric { radius } => {
                radius > 0.0 && radius.is_finite() && self.core_size() >= 2
            }
        };
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "synthetic recipe {:?} on {} nodes is degenerate",
                self.model, self.num_nodes
            )));
        }
        Ok(())
    }

    fn core_size(&self) -> usize {
        self.num_nodes - self.num_nodes / 100
    }
}

/// Generates the stream described by `recipe`.
pub fn synthetic_stream(recipe: &SyntheticRecipe) -> Result<SnapshotStream> {
    recipe.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(recipe.seed);
    let n = recipe.num_nodes;
    let core = recipe.core_size();
    let mut state = Growth::new(n);
    let positions: Vec<(f64, f64)> = match recipe.model {
        SyntheticModel::PreferentialAttachment { m } => {
            preferential_base(&mut state, &mut rng, core, m);
            Vec::new()
        }
        SyntheticModel::Geometric { radius } => {
            let pos: Vec<(f64, f64)> = (0..n).map(|_| (rng.random(), rng.random())).collect();
            for u in 0..core {
                for v in u + 1..core {
                    if distance(pos[u], pos[v]) <= radius {
                        state.add(u, v);
                    }
                }
            }
            pos
        }
    };
    let mut events: Vec<Event> = state
        .edges
        .iter()
        .map(|&(u, v)| Event::new(u, v, 1.0, 0))
        .collect();

    let growth = state.edges.len();
    let late: Vec<NodeId> = (core..n).collect();
    let join_every = if late.is_empty() { usize::MAX } else { (growth / late.len()).max(1) };
    let mut joined = 0;
    for step in 1..=growth {
        let edge = if step % join_every == 0 && joined < late.len() {
            let u = late[joined];
            joined += 1;
            let v = match recipe.model {
                SyntheticModel::PreferentialAttachment { .. } => state.preferential(&mut rng),
                SyntheticModel::Geometric { .. } => nearest(&positions, u, 0..core),
            };
            Some((u, v))
        } else {
            match recipe.model {
                SyntheticModel::PreferentialAttachment { .. } => {
                    densify(&state, &mut rng, |s, r, _| s.preferential(r))
                }
                SyntheticModel::Geometric { radius } => densify(&state, &mut rng, |s, r, u| {
                    let close: Vec<NodeId> = (0..n)
                        .filter(|&v| !s.is_isolated(v) && distance(positions[u], positions[v]) <= 2.0 * radius)
                        .collect();
                    *close.choose(r).unwrap_or(&u)
                }),
            }
        };
        if let Some((u, v)) = edge {
            state.add(u, v);
            events.push(Event::new(u, v, 1.0, step as i64));
        }
    }
    SnapshotStream::from_events(n, &[], events)
}

/// Picks `u` among connected nodes uniformly and `v = pick(u)`, retrying
/// until the pair is new.
fn densify(
    state: &Growth,
    rng: &mut ChaCha8Rng,
    pick: impl Fn(&Growth, &mut ChaCha8Rng, NodeId) -> NodeId,
) -> Option<(NodeId, NodeId)> {
    for _ in 0..100 {
        let u = state.uniform_node(rng);
        let v = pick(state, rng, u);
        if u != v && !state.adjacent(u, v) {
            return Some((u, v));
        }
    }
    None
}

fn preferential_base(state: &mut Growth, rng: &mut ChaCha8Rng, core: usize, m: usize) {
    for u in 0..=m {
        for v in u + 1..=m {
            state.add(u, v);
        }
    }
    for u in m + 1..core {
        let mut targets = Vec::with_capacity(m);
        while targets.len() < m {
            let v = state.preferential(rng);
            if !targets.contains(&v) {
                targets.push(v);
            }
        }
        for v in targets {
            state.add(u, v);
        }
    }
}

fn distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

fn nearest(pos: &[(f64, f64)], u: NodeId, candidates: std::ops::Range<NodeId>) -> NodeId {
    candidates
        .min_by(|&a, &b| distance(pos[u], pos[a]).total_cmp(&distance(pos[u], pos[b])))
        .expect("core is nonempty")
}

/// Edge set under construction with an endpoint list for degree-biased sampling.
struct Growth {
    edges: Vec<(NodeId, NodeId)>,
    endpoints: Vec<NodeId>,
    neighbors: Vec<Vec<NodeId>>,
    connected: Vec<NodeId>,
}

impl Growth {
    fn new(n: usize) -> Self {
        Growth {
            edges: Vec::new(),
            endpoints: Vec::new(),
            neighbors: vec![Vec::new(); n],
            connected: Vec::new(),
        }
    }

    fn add(&mut self, u: NodeId, v: NodeId) {
        for (a, b) in [(u, v), (v, u)] {
            if self.neighbors[a].is_empty() {
                self.connected.push(a);
            }
            self.neighbors[a].push(b);
            self.endpoints.push(a);
        }
        self.edges.push((u, v));
    }

    fn adjacent(&self, u: NodeId, v: NodeId) -> bool {
        self.neighbors[u].contains(&v)
    }

    fn is_isolated(&self, u: NodeId) -> bool {
        self.neighbors[u].is_empty()
    }

    /// A node drawn with probability proportional to its degree.
    fn preferential(&self, rng: &mut ChaCha8Rng) -> NodeId {
        *self.endpoints.choose(rng).expect("graph has edges")
    }

    fn uniform_node(&self, rng: &mut ChaCha8Rng) -> NodeId {
        *self.connected.choose(rng).expect("graph has edges")
    }
}
