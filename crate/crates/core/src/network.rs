//! Directed road network with a memoized shortest-path oracle.
//!
//! Travel times are seconds. Each source's full Dijkstra tree is computed on
//! first use and cached, so repeated queries from the same origin are lookups.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;
use std::sync::OnceLock;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("row {row}: unknown node {node}")]
    UnknownArcNode { row: usize, node: NodeId },
    #[error("row {row}: travel time {time} must be positive and finite")]
    BadTravelTime { row: usize, time: f64 },
    #[error("row {row}: duplicate node {node}")]
    DuplicateNode { row: usize, node: NodeId },
    #[error("points {0} and {1} coincide")]
    CoincidentPoints(NodeId, NodeId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeRecord {
    pub id: NodeId,
    pub x: Option<f64>,
    pub y: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArcRecord {
    pub from: NodeId,
    pub to: NodeId,
    pub travel_time: f64,
    pub length: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Arc {
    to: usize,
    time: f64,
    length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub total_time: f64,
    pub node_sequence: Vec<NodeId>,
}

#[derive(Debug)]
struct Tree {
    dist: Vec<f64>,
    pred: Vec<usize>,
}

const NO_PRED: usize = usize::MAX;

pub struct Network {
    ids: Vec<NodeId>,
    coords: Vec<Option<(f64, f64)>>,
    index: HashMap<NodeId, usize>,
    adjacency: Vec<Vec<Arc>>,
    trees: Vec<OnceLock<Tree>>,
}

impl fmt::Debug for Network {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Network")
            .field("nodes", &self.ids.len())
            .field("arcs", &self.arc_count())
            .finish()
    }
}

#[derive(PartialEq)]
struct HeapEntry {
    dist: f64,
    id: NodeId,
    idx: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.id.cmp(&self.id))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Network {
    /// Builds a network from parsed node and arc rows. Duplicate arcs keep the
    /// smallest travel time. Row numbers in errors are 1-based data rows.
    pub fn load(nodes: &[NodeRecord], arcs: &[ArcRecord]) -> Result<Self, NetworkError> {
        let mut ids = Vec::with_capacity(nodes.len());
        let mut coords = Vec::with_capacity(nodes.len());
        let mut index = HashMap::with_capacity(nodes.len());
        for (row, n) in nodes.iter().enumerate() {
            if index.insert(n.id, ids.len()).is_some() {
                return Err(NetworkError::DuplicateNode { row: row + 1, node: n.id });
            }
            ids.push(n.id);
            coords.push(match (n.x, n.y) {
                (Some(x), Some(y)) => Some((x, y)),
                _ => None,
            });
        }
        let mut best: HashMap<(usize, usize), (f64, f64)> = HashMap::new();
        for (row, a) in arcs.iter().enumerate() {
            let row = row + 1;
            let from = *index
                .get(&a.from)
                .ok_or(NetworkError::UnknownArcNode { row, node: a.from })?;
            let to = *index
                .get(&a.to)
                .ok_or(NetworkError::UnknownArcNode { row, node: a.to })?;
            if !(a.travel_time.is_finite() && a.travel_time > 0.0) {
                return Err(NetworkError::BadTravelTime { row, time: a.travel_time });
            }
            // missing lengths fall back to 1 m/s so distance is always defined
            let length = a.length.unwrap_or(a.travel_time);
            best.entry((from, to))
                .and_modify(|e| {
                    if a.travel_time < e.0 {
                        *e = (a.travel_time, length);
                    }
                })
                .or_insert((a.travel_time, length));
        }
        let mut adjacency: Vec<Vec<Arc>> = vec![Vec::new(); ids.len()];
        for ((from, to), (time, length)) in best {
            adjacency[from].push(Arc { to, time, length });
        }
        for list in &mut adjacency {
            list.sort_by_key(|a| ids[a.to]);
        }
        let trees = (0..ids.len()).map(|_| OnceLock::new()).collect();
        Ok(Network { ids, coords, index, adjacency, trees })
    }

    /// Complete directed graph over planar points; arc time is the Euclidean
    /// distance (unit speed).
    pub fn euclidean(points: &[(NodeId, f64, f64)]) -> Result<Self, NetworkError> {
        let nodes: Vec<NodeRecord> = points
            .iter()
            .map(|&(id, x, y)| NodeRecord { id, x: Some(x), y: Some(y) })
            .collect();
        let mut arcs = Vec::new();
        for &(a, ax, ay) in points {
            for &(b, bx, by) in points {
                if a == b {
                    continue;
                }
                let d = (ax - bx).hypot(ay - by);
                if d == 0.0 {
                    return Err(NetworkError::CoincidentPoints(a, b));
                }
                arcs.push(ArcRecord { from: a, to: b, travel_time: d, length: Some(d) });
            }
        }
        Network::load(&nodes, &arcs)
    }

    /// Rectangular street grid with two-way arcs between 4-neighbours.
    /// Node ids are `row * cols + col`.
    pub fn grid(rows: u32, cols: u32, spacing_m: f64, speed_mps: f64) -> Self {
        let mut nodes = Vec::new();
        let mut arcs = Vec::new();
        let t = spacing_m / speed_mps;
        for r in 0..rows {
            for c in 0..cols {
                let id = NodeId(r * cols + c);
                nodes.push(NodeRecord {
                    id,
                    x: Some(c as f64 * spacing_m),
                    y: Some(r as f64 * spacing_m),
                });
                let mut link = |other: NodeId| {
                    arcs.push(ArcRecord { from: id, to: other, travel_time: t, length: Some(spacing_m) });
                    arcs.push(ArcRecord { from: other, to: id, travel_time: t, length: Some(spacing_m) });
                };
                if c + 1 < cols {
                    link(NodeId(r * cols + c + 1));
                }
                if r + 1 < rows {
                    link(NodeId((r + 1) * cols + c));
                }
            }
        }
        Network::load(&nodes, &arcs).expect("grid construction is always valid")
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn arc_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }

    pub fn node_ids(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.index.contains_key(&node)
    }

    pub fn coordinates(&self, node: NodeId) -> Option<(f64, f64)> {
        self.index.get(&node).and_then(|&i| self.coords[i])
    }

    /// Travel time and length of the direct arc `from -> to`, if present.
    pub fn arc(&self, from: NodeId, to: NodeId) -> Option<(f64, f64)> {
        let f = *self.index.get(&from)?;
        let t = *self.index.get(&to)?;
        self.adjacency[f]
            .iter()
            .find(|a| a.to == t)
            .map(|a| (a.time, a.length))
    }

    fn idx(&self, node: NodeId) -> Result<usize, NetworkError> {
        self.index.get(&node).copied().ok_or(NetworkError::UnknownNode(node))
    }

    fn tree(&self, source: usize) -> &Tree {
        self.trees[source].get_or_init(|| self.dijkstra(source))
    }

    fn dijkstra(&self, source: usize) -> Tree {
        let n = self.ids.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred = vec![NO_PRED; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(HeapEntry { dist: 0.0, id: self.ids[source], idx: source });
        while let Some(HeapEntry { dist: d, idx: u, .. }) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            for arc in &self.adjacency[u] {
                let nd = d + arc.time;
                if nd < dist[arc.to] {
                    dist[arc.to] = nd;
                    pred[arc.to] = u;
                    heap.push(HeapEntry { dist: nd, id: self.ids[arc.to], idx: arc.to });
                }
            }
        }
        Tree { dist, pred }
    }

    /// Shortest travel time; `+inf` when `b` is unreachable from `a`.
    pub fn shortest_time(&self, a: NodeId, b: NodeId) -> Result<f64, NetworkError> {
        let ai = self.idx(a)?;
        let bi = self.idx(b)?;
        Ok(self.tree(ai).dist[bi])
    }

    /// Like [`shortest_time`](Self::shortest_time) but unknown nodes are unreachable.
    pub fn time(&self, a: NodeId, b: NodeId) -> f64 {
        match (self.index.get(&a), self.index.get(&b)) {
            (Some(&ai), Some(&bi)) => self.tree(ai).dist[bi],
            _ => f64::INFINITY,
        }
    }

    /// Shortest path including both endpoints, or `None` if unreachable.
    pub fn path(&self, a: NodeId, b: NodeId) -> Result<Option<PathResult>, NetworkError> {
        let ai = self.idx(a)?;
        let bi = self.idx(b)?;
        let tree = self.tree(ai);
        if !tree.dist[bi].is_finite() {
            return Ok(None);
        }
        let mut seq = vec![bi];
        let mut cur = bi;
        while cur != ai {
            cur = tree.pred[cur];
            seq.push(cur);
        }
        seq.reverse();
        Ok(Some(PathResult {
            total_time: tree.dist[bi],
            node_sequence: seq.into_iter().map(|i| self.ids[i]).collect(),
        }))
    }

    /// Uncached single query, used to cross-check the memo.
    pub fn shortest_time_uncached(&self, a: NodeId, b: NodeId) -> Result<f64, NetworkError> {
        let ai = self.idx(a)?;
        let bi = self.idx(b)?;
        Ok(self.dijkstra(ai).dist[bi])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(id: u32) -> NodeRecord {
        NodeRecord { id: NodeId(id), x: None, y: None }
    }

    fn a(from: u32, to: u32, t: f64) -> ArcRecord {
        ArcRecord { from: NodeId(from), to: NodeId(to), travel_time: t, length: None }
    }

    #[test]
    fn minimal_graph() {
        let net = Network::load(&[n(1), n(2)], &[a(1, 2, 10.0)]).unwrap();
        assert_eq!(net.node_count(), 2);
        assert_eq!(net.arc_count(), 1);
    }

    #[test]
    fn unknown_node_is_reported() {
        let err = Network::load(&[n(1), n(2)], &[a(1, 99, 10.0)]).unwrap_err();
        assert!(err.to_string().contains("unknown node 99"), "{err}");
        assert!(err.to_string().contains("row 1"));
    }

    #[test]
    fn non_positive_time_rejected() {
        assert!(matches!(
            Network::load(&[n(1), n(2)], &[a(1, 2, 0.0)]),
            Err(NetworkError::BadTravelTime { .. })
        ));
        assert!(Network::load(&[n(1), n(2)], &[a(1, 2, -3.0)]).is_err());
    }

    #[test]
    fn duplicate_arc_keeps_minimum() {
        let net = Network::load(&[n(1), n(2)], &[a(1, 2, 10.0), a(1, 2, 7.0)]).unwrap();
        assert_eq!(net.arc_count(), 1);
        assert_eq!(net.shortest_time(NodeId(1), NodeId(2)).unwrap(), 7.0);
        // length defaults to 1 m/s times travel time
        assert_eq!(net.arc(NodeId(1), NodeId(2)), Some((7.0, 7.0)));
    }

    #[test]
    fn shortest_time_examples() {
        let net = Network::load(
            &[n(1), n(2), n(3), n(4)],
            &[a(1, 2, 10.0), a(2, 3, 10.0), a(1, 3, 25.0)],
        )
        .unwrap();
        assert_eq!(net.shortest_time(NodeId(1), NodeId(1)).unwrap(), 0.0);
        assert_eq!(net.shortest_time(NodeId(1), NodeId(3)).unwrap(), 20.0);
        assert_eq!(net.shortest_time(NodeId(1), NodeId(4)).unwrap(), f64::INFINITY);
        assert_eq!(net.shortest_time(NodeId(3), NodeId(1)).unwrap(), f64::INFINITY);
        assert!(net.shortest_time(NodeId(1), NodeId(7)).is_err());
        let p = net.path(NodeId(1), NodeId(3)).unwrap().unwrap();
        assert_eq!(p.node_sequence, vec![NodeId(1), NodeId(2), NodeId(3)]);
        assert_eq!(p.total_time, 20.0);
    }

    #[test]
    fn euclidean_figure_distances() {
        let net = Network::euclidean(&[
            (NodeId(0), 0.0, 0.0),
            (NodeId(30), 6.0, 3.0),
            (NodeId(31), 3.0, 4.0),
        ])
        .unwrap();
        let t = net.shortest_time(NodeId(0), NodeId(30)).unwrap();
        assert!((t - 45f64.sqrt()).abs() < 1e-12);
        assert!((t - 6.7082).abs() < 1e-4);
        let t = net.shortest_time(NodeId(30), NodeId(31)).unwrap();
        assert!((t - 3.1623).abs() < 1e-4);
        let single = Network::euclidean(&[(NodeId(5), 1.0, 1.0)]).unwrap();
        assert_eq!(single.arc_count(), 0);
        assert!(Network::euclidean(&[(NodeId(1), 0.0, 0.0), (NodeId(1), 1.0, 0.0)]).is_err());
    }

    #[test]
    fn grid_is_connected() {
        let net = Network::grid(3, 4, 100.0, 10.0);
        assert_eq!(net.node_count(), 12);
        assert_eq!(net.shortest_time(NodeId(0), NodeId(11)).unwrap(), 50.0);
    }
}
