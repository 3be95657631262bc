//! Linear-assignment family: single-round LA, multi-round LA-MR and its
//! naive-swap (NS) and proper-swap (PS) extensions.

use std::collections::{BTreeMap, BTreeSet};

use crate::epoch::{evaluate, AssignmentSolution, EpochInstance, TripOracle};
use crate::model::{RequestId, VehicleId};
use crate::optim::{bipartite_matching_with, max_weight_matching_with, BnbOptions};

/// A change applied to the epoch assignment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Move {
    Assign {
        request: RequestId,
        vehicle: VehicleId,
        cost: f64,
    },
    Swap {
        request: RequestId,
        from: VehicleId,
        to: VehicleId,
        reduction: f64,
    },
}

impl Move {
    pub fn request(&self) -> RequestId {
        match *self {
            Move::Assign { request, .. } | Move::Swap { request, .. } => request,
        }
    }

    /// Vehicles whose trip this move changes.
    pub fn touched(&self) -> Vec<VehicleId> {
        match *self {
            Move::Assign { vehicle, .. } => vec![vehicle],
            Move::Swap { from, to, .. } => vec![from, to],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RoundTrace {
    pub accepted: Vec<Move>,
    /// Epoch objective after executing the round.
    pub objective: f64,
    /// Objective change predicted from edge weights.
    pub predicted_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LaTrace {
    pub initial_objective: f64,
    pub rounds: Vec<RoundTrace>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMode {
    Requests,
    Vehicles,
}

/// Running epoch assignment: requests added per vehicle this epoch.
#[derive(Clone)]
pub struct LaState<'a> {
    pub inst: &'a EpochInstance,
    pub oracle: &'a dyn TripOracle,
    pub sets: BTreeMap<VehicleId, Vec<RequestId>>,
    pub unassigned: BTreeSet<RequestId>,
}

impl<'a> LaState<'a> {
    pub fn new(inst: &'a EpochInstance, oracle: &'a dyn TripOracle) -> Self {
        LaState {
            inst,
            oracle,
            sets: inst.vehicles.iter().map(|&v| (v, Vec::new())).collect(),
            unassigned: inst.request_ids().into_iter().collect(),
        }
    }

    pub fn cost(&self, v: VehicleId) -> f64 {
        self.oracle
            .trip_cost(v, &self.sets[&v])
            .expect("committed epoch trips stay feasible")
    }

    fn cost_with(&self, v: VehicleId, r: RequestId) -> Option<f64> {
        let mut s = self.sets[&v].clone();
        let pos = s.binary_search(&r).unwrap_err();
        s.insert(pos, r);
        self.oracle.trip_cost(v, &s)
    }

    fn cost_without(&self, v: VehicleId, r: RequestId) -> Option<f64> {
        let s: Vec<RequestId> = self.sets[&v].iter().copied().filter(|&x| x != r).collect();
        self.oracle.trip_cost(v, &s)
    }

    pub fn objective(&self) -> f64 {
        let trips: f64 = self.sets.keys().map(|&v| self.cost(v)).sum();
        let pen: f64 = self.unassigned.iter().map(|&r| self.inst.penalty_of(r)).sum();
        trips + pen
    }

    /// Assignment edges `(vehicle, request, added cost)` for unassigned
    /// requests against the current trips.
    pub fn assignment_edges(&self) -> Vec<(VehicleId, RequestId, f64)> {
        let mut out = Vec::new();
        for &v in &self.inst.vehicles {
            let base = self.cost(v);
            for &r in &self.unassigned {
                if let Some(c) = self.cost_with(v, r) {
                    out.push((v, r, c - base));
                }
            }
        }
        out
    }

    /// Reduction of moving `r` from its current vehicle to `to`.
    pub fn swap_reduction(&self, r: RequestId, from: VehicleId, to: VehicleId) -> Option<f64> {
        let saved = self.cost(from) - self.cost_without(from, r)?;
        let added = self.cost_with(to, r)? - self.cost(to);
        Some(saved - added)
    }

    /// Valid naive swaps of requests assigned in this epoch.
    pub fn naive_swaps(&self) -> Vec<Move> {
        let mut out = Vec::new();
        for (&from, set) in &self.sets {
            for &r in set {
                for &to in &self.inst.vehicles {
                    if to == from {
                        continue;
                    }
                    if let Some(red) = self.swap_reduction(r, from, to) {
                        if red > 1e-9 {
                            out.push(Move::Swap {
                                request: r,
                                from,
                                to,
                                reduction: red,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    /// Most cost-reducing valid single-request move between `a` and `b`.
    pub fn proper_swap(&self, a: VehicleId, b: VehicleId) -> Option<Move> {
        let mut best: Option<Move> = None;
        let mut best_red = 1e-9;
        for (from, to) in [(a, b), (b, a)] {
            for &r in &self.sets[&from] {
                if let Some(red) = self.swap_reduction(r, from, to) {
                    if red > best_red {
                        best_red = red;
                        best = Some(Move::Swap {
                            request: r,
                            from,
                            to,
                            reduction: red,
                        });
                    }
                }
            }
        }
        best
    }

    fn gain(&self, m: &Move) -> f64 {
        match *m {
            Move::Assign { request, cost, .. } => self.inst.penalty_of(request) - cost,
            Move::Swap { reduction, .. } => reduction,
        }
    }

    pub fn apply(&mut self, m: &Move) {
        match *m {
            Move::Assign { request, vehicle, .. } => {
                self.unassigned.remove(&request);
                let s = self.sets.get_mut(&vehicle).unwrap();
                let pos = s.binary_search(&request).unwrap_err();
                s.insert(pos, request);
            }
            Move::Swap { request, from, to, .. } => {
                self.sets.get_mut(&from).unwrap().retain(|&x| x != request);
                let s = self.sets.get_mut(&to).unwrap();
                let pos = s.binary_search(&request).unwrap_err();
                s.insert(pos, request);
            }
        }
    }

    pub fn solution(&self) -> AssignmentSolution {
        evaluate(self.inst, self.oracle, &self.sets).expect("LA trips are feasible by construction")
    }
}

/// Filters matched moves in ascending request id. In `Requests` mode an
/// assignment is kept only if no vehicle has an edge to both its request and
/// an already kept one; in `Vehicles` mode kept moves touch disjoint
/// vehicles.
pub fn sample_independent(
    matched: &[Move],
    edges: &[(VehicleId, RequestId, f64)],
    mode: SampleMode,
) -> Vec<Move> {
    let mut order: Vec<Move> = matched.to_vec();
    order.sort_by_key(|m| m.request());
    let mut neighbors: BTreeMap<RequestId, BTreeSet<VehicleId>> = BTreeMap::new();
    for &(v, r, _) in edges {
        neighbors.entry(r).or_default().insert(v);
    }
    let mut kept: Vec<Move> = Vec::new();
    let mut touched: BTreeSet<VehicleId> = BTreeSet::new();
    for m in order {
        let ok = match (mode, &m) {
            (SampleMode::Requests, Move::Assign { request, .. }) => {
                let mine = neighbors.get(request).cloned().unwrap_or_default();
                kept.iter().all(|k| match k {
                    Move::Assign { request: other, .. } => neighbors
                        .get(other)
                        .map_or(true, |theirs| mine.is_disjoint(theirs)),
                    Move::Swap { .. } => true,
                })
            }
            (SampleMode::Requests, Move::Swap { .. }) => true,
            (SampleMode::Vehicles, _) => m.touched().iter().all(|v| !touched.contains(v)),
        };
        if ok {
            touched.extend(m.touched());
            kept.push(m);
        }
    }
    kept
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaVariant {
    La,
    LaMr,
    LaMrNs,
    LaMrPs,
}

fn execute_round(state: &mut LaState, accepted: &[Move], trace: &mut LaTrace) {
    let before = state.objective();
    let predicted: f64 = accepted.iter().map(|m| state.gain(m)).sum();
    for m in accepted {
        state.apply(m);
    }
    let after = state.objective();
    assert!(
        ((before - after) - predicted).abs() <= 1e-6 + 1e-12 * before.abs(),
        "round delta {} differs from predicted {}",
        before - after,
        predicted
    );
    trace.rounds.push(RoundTrace {
        accepted: accepted.to_vec(),
        objective: after,
        predicted_delta: -predicted,
    });
}

fn bipartite_round(state: &LaState, with_swaps: bool, bnb: &BnbOptions) -> (Vec<Move>, Vec<(VehicleId, RequestId, f64)>) {
    let edges = state.assignment_edges();
    let swaps = if with_swaps { state.naive_swaps() } else { Vec::new() };
    let v_index: BTreeMap<VehicleId, usize> =
        state.inst.vehicles.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    // right side: unassigned requests, then duplicate nodes of assigned ones
    let mut right: BTreeMap<(bool, RequestId), usize> = BTreeMap::new();
    for &(_, r, _) in &edges {
        let n = right.len();
        right.entry((false, r)).or_insert(n);
    }
    for m in &swaps {
        let n = right.len();
        right.entry((true, m.request())).or_insert(n);
    }
    let mut moves = Vec::new();
    let mut weighted = Vec::new();
    for &(v, r, c) in &edges {
        let m = Move::Assign {
            request: r,
            vehicle: v,
            cost: c,
        };
        weighted.push((v_index[&v], right[&(false, r)], state.gain(&m)));
        moves.push(m);
    }
    for m in swaps {
        if let Move::Swap { request, to, reduction, .. } = m {
            weighted.push((v_index[&to], right[&(true, request)], reduction));
            moves.push(m);
        }
    }
    let chosen = bipartite_matching_with(v_index.len(), right.len(), &weighted, bnb);
    (chosen.into_iter().map(|e| moves[e]).collect(), edges)
}

fn proper_swap_round(state: &LaState, bnb: &BnbOptions) -> (Vec<Move>, Vec<(VehicleId, RequestId, f64)>) {
    let edges = state.assignment_edges();
    let vehicles = &state.inst.vehicles;
    let nv = vehicles.len();
    let v_index: BTreeMap<VehicleId, usize> = vehicles.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let r_index: BTreeMap<RequestId, usize> = state
        .unassigned
        .iter()
        .enumerate()
        .map(|(i, &r)| (r, nv + i))
        .collect();
    let mut moves = Vec::new();
    let mut weighted = Vec::new();
    for &(v, r, c) in &edges {
        let m = Move::Assign {
            request: r,
            vehicle: v,
            cost: c,
        };
        weighted.push((v_index[&v], r_index[&r], state.gain(&m)));
        moves.push(m);
    }
    for (i, &a) in vehicles.iter().enumerate() {
        for &b in &vehicles[i + 1..] {
            if let Some(m) = state.proper_swap(a, b) {
                weighted.push((v_index[&a], v_index[&b], state.gain(&m)));
                moves.push(m);
            }
        }
    }
    let chosen = max_weight_matching_with(nv + r_index.len(), &weighted, bnb);
    (chosen.into_iter().map(|e| moves[e]).collect(), edges)
}

/// Runs one of the LA variants and returns the final state with its
/// per-round trace.
pub fn run_la<'a>(
    variant: LaVariant,
    inst: &'a EpochInstance,
    oracle: &'a dyn TripOracle,
    bnb: &BnbOptions,
) -> (LaState<'a>, LaTrace) {
    let mut state = LaState::new(inst, oracle);
    let mut trace = LaTrace {
        initial_objective: state.objective(),
        rounds: Vec::new(),
    };
    loop {
        let accepted = match variant {
            LaVariant::La => bipartite_round(&state, false, bnb).0,
            LaVariant::LaMr => {
                let (matched, edges) = bipartite_round(&state, false, bnb);
                sample_independent(&matched, &edges, SampleMode::Requests)
            }
            LaVariant::LaMrNs => {
                let (matched, edges) = bipartite_round(&state, true, bnb);
                sample_independent(&matched, &edges, SampleMode::Vehicles)
            }
            LaVariant::LaMrPs => {
                let (matched, edges) = proper_swap_round(&state, bnb);
                sample_independent(&matched, &edges, SampleMode::Requests)
            }
        };
        if accepted.is_empty() {
            break;
        }
        execute_round(&mut state, &accepted, &mut trace);
        if variant == LaVariant::La {
            break;
        }
    }
    (state, trace)
}

pub fn la_assign(inst: &EpochInstance, oracle: &dyn TripOracle, bnb: &BnbOptions) -> AssignmentSolution {
    run_la(LaVariant::La, inst, oracle, bnb).0.solution()
}

pub fn la_mr_assign(inst: &EpochInstance, oracle: &dyn TripOracle, bnb: &BnbOptions) -> AssignmentSolution {
    run_la(LaVariant::LaMr, inst, oracle, bnb).0.solution()
}

pub fn la_mr_ns_assign(inst: &EpochInstance, oracle: &dyn TripOracle, bnb: &BnbOptions) -> AssignmentSolution {
    run_la(LaVariant::LaMrNs, inst, oracle, bnb).0.solution()
}

pub fn la_mr_ps_assign(inst: &EpochInstance, oracle: &dyn TripOracle, bnb: &BnbOptions) -> AssignmentSolution {
    run_la(LaVariant::LaMrPs, inst, oracle, bnb).0.solution()
}

#[cfg(test)]
mod tests;
