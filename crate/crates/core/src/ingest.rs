//! Timestamped edge streams and the snapshot sequences built from them.
//!
//! Input lines are `src dst ts` or `src dst weight ts`, whitespace separated.
//! Lines starting with `%` or `#` are comments. External ids are remapped to
//! dense ids in order of first appearance and the node count is fixed to the
//! number of distinct ids in the whole file, so nodes that join later are
//! isolated in early snapshots.
//!
//! Snapshot `k` (for `0 ≤ k ≤ snapshot_count()`) is the base edge set plus all
//! events with timestamp at most `boundaries[k−1]`; snapshot 0 is the base.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Cursor, Read};
use std::path::Path;

use flate2::read::GzDecoder;

use crate::error::{Error, Result};
use crate::graph::{build_graph, Graph, GraphDelta, NodeId};

const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

/// One undirected weight change, stored with `u ≤ v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub u: NodeId,
    pub v: NodeId,
    pub weight: f64,
    pub timestamp: i64,
}

impl Event {
    pub fn new(a: NodeId, b: NodeId, weight: f64, timestamp: i64) -> Self {
        let (u, v) = if a <= b { (a, b) } else { (b, a) };
        Event {
            u,
            v,
            weight,
            timestamp,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotStream {
    num_nodes: usize,
    base: Vec<(NodeId, NodeId, f64)>,
    events: Vec<Event>,
    boundaries: Vec<i64>,
    external_ids: Vec<u64>,
}

impl SnapshotStream {
    /// A stream over dense ids `0..num_nodes`. Events are sorted stably by
    /// timestamp; every distinct timestamp becomes a snapshot boundary.
    pub fn from_events(
        num_nodes: usize,
        base: &[(NodeId, NodeId, f64)],
        mut events: Vec<Event>,
    ) -> Result<Self> {
        for &(u, v, _) in base {
            check_node(u, num_nodes)?;
            check_node(v, num_nodes)?;
        }
        for e in &events {
            check_node(e.u, num_nodes)?;
            check_node(e.v, num_nodes)?;
            if !e.weight.is_finite() {
                return Err(Error::InvalidWeight { u: e.u, v: e.v, weight: e.weight });
            }
        }
        events.sort_by_key(|e| e.timestamp);
        let mut boundaries: Vec<i64> = events.iter().map(|e| e.timestamp).collect();
        boundaries.dedup();
        let base = aggregate(base.iter().copied());
        Ok(SnapshotStream {
            num_nodes,
            base,
            events,
            boundaries,
            external_ids: (0..num_nodes as u64).collect(),
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Edges present before the first event.
    pub fn base(&self) -> &[(NodeId, NodeId, f64)] {
        &self.base
    }

    pub fn boundaries(&self) -> &[i64] {
        &self.boundaries
    }

    /// Number of boundaries; snapshots are indexed `0..=snapshot_count()`.
    pub fn snapshot_count(&self) -> usize {
        self.boundaries.len()
    }

    /// External id of a dense node id.
    pub fn external_id(&self, node: NodeId) -> Option<u64> {
        self.external_ids.get(node).copied()
    }

    pub fn external_ids(&self) -> &[u64] {
        &self.external_ids
    }

    /// Number of events up to and including snapshot `k`.
    fn prefix_len(&self, k: usize) -> Result<usize> {
        if k > self.boundaries.len() {
            return Err(Error::SnapshotOutOfRange {
                index: k,
                count: self.boundaries.len(),
            });
        }
        if k == 0 {
            return Ok(0);
        }
        let bound = self.boundaries[k - 1];
        Ok(self.events.partition_point(|e| e.timestamp <= bound))
    }

    /// The graph at snapshot `k`, with weights accumulated.
    pub fn snapshot_graph(&self, k: usize) -> Result<Graph> {
        let end = self.prefix_len(k)?;
        let edges = aggregate(
            self.base
                .iter()
                .copied()
                .chain(self.events[..end].iter().map(|e| (e.u, e.v, e.weight))),
        );
        build_graph(&edges, self.num_nodes)
    }

    /// The weight changes taking snapshot `i` to snapshot `j`.
    pub fn delta_between(&self, i: usize, j: usize) -> Result<GraphDelta> {
        if i >= j {
            return Err(Error::InvalidParameter(format!(
                "snapshot window must satisfy i < j, got {i}:{j}"
            )));
        }
        let start = self.prefix_len(i)?;
        let end = self.prefix_len(j)?;
        let changes = aggregate(self.events[start..end].iter().map(|e| (e.u, e.v, e.weight)));
        Ok(GraphDelta::new(changes))
    }

    /// Number of events between consecutive snapshots.
    pub fn events_per_snapshot(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.boundaries.len());
        let mut start = 0;
        for k in 1..=self.boundaries.len() {
            let end = self.prefix_len(k).unwrap_or(start);
            out.push(end - start);
            start = end;
        }
        out
    }

    /// The stream cut after snapshot `k`.
    pub fn truncated(&self, k: usize) -> Result<SnapshotStream> {
        let end = self.prefix_len(k)?;
        Ok(SnapshotStream {
            events: self.events[..end].to_vec(),
            boundaries: self.boundaries[..k].to_vec(),
            ..self.clone()
        })
    }

    /// Regroups the events into consecutive batches of `batch_size`, in
    /// stream order, replacing timestamps by batch indices.
    pub fn rebatch(&self, batch_size: usize) -> Result<SnapshotStream> {
        if batch_size == 0 {
            return Err(Error::InvalidParameter("batch size must be positive".into()));
        }
        let events: Vec<Event> = self
            .events
            .iter()
            .enumerate()
            .map(|(i, e)| Event {
                timestamp: (i / batch_size) as i64,
                ..*e
            })
            .collect();
        let mut boundaries: Vec<i64> = events.iter().map(|e| e.timestamp).collect();
        boundaries.dedup();
        Ok(SnapshotStream {
            events,
            boundaries,
            ..self.clone()
        })
    }
}

/// The same history played backwards: snapshot `k` of the result is snapshot
/// `snapshot_count() − k` of `stream`, and every event removes weight.
pub fn reverse_time(stream: &SnapshotStream) -> SnapshotStream {
    let base = aggregate(
        stream
            .base
            .iter()
            .copied()
            .chain(stream.events.iter().map(|e| (e.u, e.v, e.weight))),
    );
    let events = stream
        .events
        .iter()
        .rev()
        .map(|e| Event {
            u: e.u,
            v: e.v,
            weight: -e.weight,
            timestamp: -e.timestamp,
        })
        .collect();
    let boundaries = stream.boundaries.iter().rev().map(|b| -b).collect();
    SnapshotStream {
        num_nodes: stream.num_nodes,
        base,
        events,
        boundaries,
        external_ids: stream.external_ids.clone(),
    }
}

/// Sums weights per undirected edge, dropping entries that cancel.
fn aggregate(edges: impl Iterator<Item = (NodeId, NodeId, f64)>) -> Vec<(NodeId, NodeId, f64)> {
    let mut sums: BTreeMap<(NodeId, NodeId), (f64, f64)> = BTreeMap::new();
    for (a, b, w) in edges {
        let key = if a <= b { (a, b) } else { (b, a) };
        let entry = sums.entry(key).or_insert((0.0, 0.0));
        entry.0 += w;
        entry.1 = entry.1.max(w.abs());
    }
    sums.into_iter()
        .filter(|(_, (w, scale))| w.abs() > 1e-12 * scale)
        .map(|((u, v), (w, _))| (u, v, w))
        .collect()
}

fn check_node(u: NodeId, n: usize) -> Result<()> {
    if u >= n {
        return Err(Error::NodeOutOfRange { id: u, num_nodes: n });
    }
    Ok(())
}

/// Parses an edge stream, decompressing gzip input transparently.
pub fn parse_edge_stream(mut input: impl Read) -> Result<SnapshotStream> {
    let mut bytes = Vec::new();
    input
        .read_to_end(&mut bytes)
        .map_err(|e| Error::Parse {
            line: 0,
            message: e.to_string(),
        })?;
    if bytes.starts_with(&GZIP_MAGIC) {
        parse_lines(BufReader::new(GzDecoder::new(Cursor::new(bytes))))
    } else {
        parse_lines(Cursor::new(bytes))
    }
}

pub fn parse_edge_file(path: &Path) -> Result<SnapshotStream> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_edge_stream(file)
}

fn parse_lines(reader: impl BufRead) -> Result<SnapshotStream> {
    let mut dense: HashMap<u64, NodeId> = HashMap::new();
    let mut external_ids = Vec::new();
    let mut raw = Vec::new();
    for (index, line) in reader.lines().enumerate() {
        let lineno = index + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let bad = |message: String| Error::Parse {
            line: lineno,
            message,
        };
        let (weight, ts) = match fields.len() {
            3 => (1.0, fields[2]),
            4 => {
                let w: f64 = fields[2]
                    .parse()
                    .map_err(|_| bad(format!("non-numeric weight '{}'", fields[2])))?;
                if !(w.is_finite() && w >= 0.0) {
                    return Err(bad(format!("weight must be nonnegative, got {w}")));
                }
                (w, fields[3])
            }
            2 => return Err(bad("missing timestamp".into())),
            k => return Err(bad(format!("expected 3 or 4 fields, found {k}"))),
        };
        let timestamp = parse_timestamp(ts).ok_or_else(|| bad(format!("non-numeric timestamp '{ts}'")))?;
        let mut id = |field: &str| -> Result<NodeId> {
            let ext: u64 = field
                .parse()
                .map_err(|_| bad(format!("non-numeric node id '{field}'")))?;
            Ok(*dense.entry(ext).or_insert_with(|| {
                external_ids.push(ext);
                external_ids.len() - 1
            }))
        };
        let u = id(fields[0])?;
        let v = id(fields[1])?;
        raw.push(Event::new(u, v, weight, timestamp));
    }

    raw.sort_by_key(|e| e.timestamp);
    // Merge repeated edges within one timestamp, keeping first-seen order.
    let mut events: Vec<Event> = Vec::with_capacity(raw.len());
    let mut slot: HashMap<(NodeId, NodeId), usize> = HashMap::new();
    let mut current = None;
    for e in raw {
        if current != Some(e.timestamp) {
            slot.clear();
            current = Some(e.timestamp);
        }
        match slot.get(&(e.u, e.v)) {
            Some(&i) => events[i].weight += e.weight,
            None => {
                slot.insert((e.u, e.v), events.len());
                events.push(e);
            }
        }
    }
    let mut stream = SnapshotStream::from_events(external_ids.len(), &[], events)?;
    stream.external_ids = external_ids;
    Ok(stream)
}

fn parse_timestamp(field: &str) -> Option<i64> {
    if let Ok(t) = field.parse::<i64>() {
        return Some(t);
    }
    let f: f64 = field.parse().ok()?;
    (f.is_finite() && f.fract() == 0.0 && f.abs() < 9.0e18).then_some(f as i64)
}
