//! Cyclic exchange over the LA-MR assignment: exchange graph, labelled
//! best-first cycle search and the frontier loop that executes cycles.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use rayon::prelude::*;

use crate::epoch::{AssignmentSolution, EpochInstance, TripOracle};
use crate::model::{RequestId, VehicleId};
use crate::optim::BnbOptions;

use super::la::{run_la, LaState, LaVariant};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CeOptions {
    /// Value of leaving a request unserved; `None` uses the epoch penalty.
    pub u: Option<f64>,
    pub labels_per_node: usize,
    /// Drop paths whose cumulative reduction falls below minus the source
    /// removal reduction.
    pub prune: bool,
}

impl Default for CeOptions {
    fn default() -> Self {
        CeOptions {
            u: None,
            labels_per_node: 1,
            prune: true,
        }
    }
}

impl CeOptions {
    /// Exhaustive search: unbounded labels, no pruning.
    pub fn exhaustive() -> Self {
        CeOptions {
            u: None,
            labels_per_node: usize::MAX,
            prune: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Request(RequestId),
    Vehicle(VehicleId),
}

/// Owner of a request: a vehicle or the null partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Part {
    Vehicle(VehicleId),
    Null,
}

/// Arc `i -> j` moves `i` into the partition of `j` and moves `j` out;
/// arcs into a vehicle node add without replacement and arcs out of one
/// remove without replacement. Weights are cost reductions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExchangeGraph {
    pub part: BTreeMap<RequestId, Part>,
    pub vehicles: Vec<VehicleId>,
    pub arcs: BTreeMap<Node, Vec<(Node, f64)>>,
    /// Reduction from removing each request without replacement.
    pub removal: BTreeMap<RequestId, f64>,
}

impl ExchangeGraph {
    pub fn arc(&self, from: Node, to: Node) -> Option<f64> {
        self.arcs
            .get(&from)?
            .iter()
            .find(|(n, _)| *n == to)
            .map(|&(_, w)| w)
    }

    pub fn add_arc(&mut self, from: Node, to: Node, w: f64) {
        let out = self.arcs.entry(from).or_default();
        match out.binary_search_by(|(n, _)| n.cmp(&to)) {
            Ok(i) => out[i].1 = w,
            Err(i) => out.insert(i, (to, w)),
        }
    }

    fn neighbors(&self, n: Node) -> &[(Node, f64)] {
        self.arcs.get(&n).map_or(&[], |v| v.as_slice())
    }

    fn part_of(&self, n: Node) -> Part {
        match n {
            Node::Request(r) => self.part[&r],
            Node::Vehicle(v) => Part::Vehicle(v),
        }
    }

    /// Sum of arc weights around a closed node sequence, or `None` if an
    /// arc is missing.
    pub fn cycle_value(&self, cycle: &[Node]) -> Option<f64> {
        let mut total = 0.0;
        for (i, &a) in cycle.iter().enumerate() {
            total += self.arc(a, cycle[(i + 1) % cycle.len()])?;
        }
        Some(total)
    }

    /// At most one vehicle node and every touched partition distinct.
    pub fn is_valid_cycle(&self, cycle: &[Node]) -> bool {
        let mut parts = BTreeSet::new();
        let mut vehicle_nodes = 0;
        for &n in cycle {
            if matches!(n, Node::Vehicle(_)) {
                vehicle_nodes += 1;
            }
            if !parts.insert(self.part_of(n)) {
                return false;
            }
        }
        vehicle_nodes <= 1 && cycle.iter().collect::<BTreeSet<_>>().len() == cycle.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cycle {
    /// Starts at the source; the last node links back to it.
    pub nodes: Vec<Node>,
    pub reduction: f64,
}

/// Cost model shared by graph construction and execution.
struct Partitions<'s, 'a> {
    state: &'s LaState<'a>,
    u: f64,
}

impl Partitions<'_, '_> {
    fn pen(&self, r: RequestId) -> f64 {
        match self.state.inst.get(r) {
            Some(x) if x.carried => self.u * self.state.inst.kappa,
            _ => self.u,
        }
    }

    fn part(&self) -> BTreeMap<RequestId, Part> {
        let mut out: BTreeMap<RequestId, Part> =
            self.state.unassigned.iter().map(|&r| (r, Part::Null)).collect();
        for (&v, rs) in &self.state.sets {
            for &r in rs {
                out.insert(r, Part::Vehicle(v));
            }
        }
        out
    }

    fn cost(&self, v: VehicleId, set: &[RequestId]) -> Option<f64> {
        self.state.oracle.trip_cost(v, set)
    }

    fn objective(&self) -> f64 {
        let trips: f64 = self.state.sets.keys().map(|&v| self.state.cost(v)).sum();
        trips + self.state.unassigned.iter().map(|&r| self.pen(r)).sum::<f64>()
    }
}

fn replaced(set: &[RequestId], out: Option<RequestId>, inn: Option<RequestId>) -> Vec<RequestId> {
    let mut s: Vec<RequestId> = set.iter().copied().filter(|&x| Some(x) != out).collect();
    if let Some(r) = inn {
        let pos = s.binary_search(&r).unwrap_err();
        s.insert(pos, r);
    }
    s
}

fn build(p: &Partitions) -> ExchangeGraph {
    let part = p.part();
    let sets = &p.state.sets;
    let base: BTreeMap<VehicleId, f64> = sets.keys().map(|&v| (v, p.state.cost(v))).collect();
    let requests: Vec<RequestId> = part.keys().copied().collect();

    // Per target request j: removal reduction and arcs i -> j.
    let per_target: Vec<(RequestId, Option<f64>, Vec<(RequestId, f64)>)> = requests
        .par_iter()
        .map(|&j| {
            let pj = part[&j];
            let removal = match pj {
                Part::Null => Some(p.pen(j)),
                Part::Vehicle(w) => p
                    .cost(w, &replaced(&sets[&w], Some(j), None))
                    .map(|c| base[&w] - c),
            };
            let mut into = Vec::new();
            for &i in &requests {
                if part[&i] == pj {
                    continue;
                }
                let w = match pj {
                    Part::Null => Some(p.pen(j) - p.pen(i)),
                    Part::Vehicle(w) => p
                        .cost(w, &replaced(&sets[&w], Some(j), Some(i)))
                        .map(|c| base[&w] - c),
                };
                if let Some(w) = w {
                    into.push((i, w));
                }
            }
            (j, removal, into)
        })
        .collect();

    // Per vehicle v: arcs r -> v.
    let per_vehicle: Vec<(VehicleId, Vec<(RequestId, f64)>)> = p
        .state
        .inst
        .vehicles
        .par_iter()
        .map(|&v| {
            let mut into = Vec::new();
            for &r in &requests {
                if part[&r] == Part::Vehicle(v) {
                    continue;
                }
                if let Some(c) = p.cost(v, &replaced(&sets[&v], None, Some(r))) {
                    into.push((r, base[&v] - c));
                }
            }
            (v, into)
        })
        .collect();

    let mut g = ExchangeGraph {
        part: part.clone(),
        vehicles: p.state.inst.vehicles.clone(),
        arcs: BTreeMap::new(),
        removal: BTreeMap::new(),
    };
    for (j, removal, into) in per_target {
        for (i, w) in into {
            g.add_arc(Node::Request(i), Node::Request(j), w);
        }
        if let Some(t) = removal {
            g.removal.insert(j, t);
            for &v in &g.vehicles.clone() {
                if part[&j] != Part::Vehicle(v) {
                    g.add_arc(Node::Vehicle(v), Node::Request(j), t);
                }
            }
        }
    }
    for (v, into) in per_vehicle {
        for (r, w) in into {
            g.add_arc(Node::Request(r), Node::Vehicle(v), w);
        }
    }
    g
}

/// Builds the exchange graph of an LA assignment; unassigned requests form
/// the null partition valued at `u` each (times kappa when carried).
pub fn build_exchange_graph(state: &LaState, u: f64) -> ExchangeGraph {
    build(&Partitions { state, u })
}

struct Label {
    node: Node,
    value: f64,
    path: Vec<Node>,
    alive: bool,
}

#[derive(PartialEq)]
struct QueueItem {
    value: f64,
    seq: usize,
}

impl Eq for QueueItem {}

impl Ord for QueueItem {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for QueueItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn extends(g: &ExchangeGraph, path: &[Node], j: Node) -> bool {
    if path.contains(&j) {
        return false;
    }
    if matches!(j, Node::Vehicle(_)) && path.iter().any(|n| matches!(n, Node::Vehicle(_))) {
        return false;
    }
    let pj = g.part_of(j);
    path.iter().all(|&n| g.part_of(n) != pj)
}

/// Best-first labelled search for the largest positive-reduction valid
/// cycle through `source`. Also returns every node reached.
pub fn max_cost_reducing_cycle(
    g: &ExchangeGraph,
    source: RequestId,
    labels_per_node: usize,
    prune: bool,
) -> (Option<Cycle>, BTreeSet<Node>) {
    let src = Node::Request(source);
    let mut explored = BTreeSet::from([src]);
    let threshold = g.removal.get(&source).copied().unwrap_or(f64::INFINITY);
    let k = labels_per_node.max(1);
    let mut labels = vec![Label {
        node: src,
        value: 0.0,
        path: vec![src],
        alive: true,
    }];
    let mut kept: BTreeMap<Node, Vec<usize>> = BTreeMap::new();
    let mut queue = BinaryHeap::from([QueueItem { value: 0.0, seq: 0 }]);
    let mut best: Option<Cycle> = None;

    while let Some(item) = queue.pop() {
        let label = &labels[item.seq];
        if !label.alive {
            continue;
        }
        if prune && label.value < -threshold {
            break;
        }
        let (i, value, path) = (label.node, label.value, label.path.clone());
        for &(j, w) in g.neighbors(i) {
            let v = value + w;
            if j == src {
                if path.len() > 1 && best.as_ref().map_or(true, |b| v > b.reduction) {
                    best = Some(Cycle {
                        nodes: path.clone(),
                        reduction: v,
                    });
                }
                continue;
            }
            if !extends(g, &path, j) {
                continue;
            }
            explored.insert(j);
            let slot = kept.entry(j).or_default();
            if slot.len() >= k {
                let (pos, &worst) = slot
                    .iter()
                    .enumerate()
                    .min_by(|a, b| labels[*a.1].value.total_cmp(&labels[*b.1].value))
                    .unwrap();
                if v <= labels[worst].value {
                    continue;
                }
                labels[worst].alive = false;
                slot.swap_remove(pos);
            }
            let mut p = path.clone();
            p.push(j);
            let seq = labels.len();
            labels.push(Label {
                node: j,
                value: v,
                path: p,
                alive: true,
            });
            kept.get_mut(&j).unwrap().push(seq);
            queue.push(QueueItem { value: v, seq });
        }
    }
    (best.filter(|c| c.reduction > 1e-9), explored)
}

/// New owner of every request on a cycle: the partition of its successor.
pub fn cycle_moves(g: &ExchangeGraph, cycle: &[Node]) -> Vec<(RequestId, Part, Part)> {
    let mut out = Vec::new();
    for (i, &n) in cycle.iter().enumerate() {
        if let Node::Request(r) = n {
            let next = cycle[(i + 1) % cycle.len()];
            out.push((r, g.part[&r], g.part_of(next)));
        }
    }
    out
}

fn execute(state: &mut LaState, moves: &[(RequestId, Part, Part)]) {
    for &(r, from, _) in moves {
        match from {
            Part::Null => {
                state.unassigned.remove(&r);
            }
            Part::Vehicle(v) => state.sets.get_mut(&v).unwrap().retain(|&x| x != r),
        }
    }
    for &(r, _, to) in moves {
        match to {
            Part::Null => {
                state.unassigned.insert(r);
            }
            Part::Vehicle(v) => {
                let s = state.sets.get_mut(&v).unwrap();
                let pos = s.binary_search(&r).unwrap_err();
                s.insert(pos, r);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutedCycle {
    pub cycle: Cycle,
    /// Objective decrease measured by recomputing all trips.
    pub realized: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CeTrace {
    pub executed: Vec<ExecutedCycle>,
    pub searches: usize,
}

fn changed_nodes(a: &ExchangeGraph, b: &ExchangeGraph) -> BTreeSet<Node> {
    let mut out = BTreeSet::new();
    let keys: BTreeSet<Node> = a.arcs.keys().chain(b.arcs.keys()).copied().collect();
    for from in keys {
        let xs = a.neighbors(from);
        let ys = b.neighbors(from);
        for &(to, w) in xs {
            if b.arc(from, to).map_or(true, |w2| w2 != w) {
                out.insert(from);
                out.insert(to);
            }
        }
        for &(to, _) in ys {
            if a.arc(from, to).is_none() {
                out.insert(from);
                out.insert(to);
            }
        }
    }
    out
}

/// Improves an assignment in place by executing cost-reducing valid cycles
/// until no search from any request succeeds.
pub fn cyclic_exchange(state: &mut LaState, opts: &CeOptions) -> CeTrace {
    let u = opts.u.unwrap_or(state.inst.penalty);
    let mut trace = CeTrace::default();
    let mut graph = build(&Partitions { state, u });
    let all: Vec<RequestId> = graph.part.keys().copied().collect();
    let mut frontier: BTreeSet<RequestId> = all.iter().copied().collect();
    let mut memo: BTreeMap<RequestId, BTreeSet<Node>> = BTreeMap::new();

    while let Some(i) = frontier.pop_first() {
        trace.searches += 1;
        let (found, explored) = max_cost_reducing_cycle(&graph, i, opts.labels_per_node, opts.prune);
        let Some(cycle) = found else {
            memo.insert(i, explored);
            continue;
        };
        assert!(graph.is_valid_cycle(&cycle.nodes), "invalid cycle {:?}", cycle.nodes);
        let before = Partitions { state, u }.objective();
        let moves = cycle_moves(&graph, &cycle.nodes);
        execute(state, &moves);
        let after = Partitions { state, u }.objective();
        let realized = before - after;
        assert!(
            (realized - cycle.reduction).abs() <= 1e-6 + 1e-12 * before.abs(),
            "cycle reduction {} realized as {}",
            cycle.reduction,
            realized
        );
        let next = build(&Partitions { state, u });
        let affected = changed_nodes(&graph, &next);
        graph = next;
        frontier.insert(i);
        for &j in &all {
            if memo.get(&j).map_or(false, |m| !m.is_disjoint(&affected)) {
                frontier.insert(j);
            }
        }
        trace.executed.push(ExecutedCycle { cycle, realized });
    }
    trace
}

pub fn la_mr_ce_traced<'a>(
    inst: &'a EpochInstance,
    oracle: &'a dyn TripOracle,
    bnb: &BnbOptions,
    opts: &CeOptions,
) -> (LaState<'a>, CeTrace) {
    let (mut state, _) = run_la(LaVariant::LaMr, inst, oracle, bnb);
    let trace = cyclic_exchange(&mut state, opts);
    (state, trace)
}

pub fn la_mr_ce_assign(
    inst: &EpochInstance,
    oracle: &dyn TripOracle,
    bnb: &BnbOptions,
    opts: &CeOptions,
) -> AssignmentSolution {
    la_mr_ce_traced(inst, oracle, bnb, opts).0.solution()
}
