//! Request-trip-vehicle assignment: shareability graph, clique-driven trip
//! enumeration and the epoch ILP over the trip catalog.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::epoch::{evaluate, AssignmentSolution, EpochInstance, TripOracle};
use crate::model::{RequestId, VehicleId};
use crate::optim::{bnb_solve_with, BnbOptions, Cmp, LpProblem, Sense};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ShareabilityGraph {
    /// Unordered request pairs stored with the smaller id first.
    pub rr: BTreeSet<(RequestId, RequestId)>,
    /// Feasible single-request trips per vehicle, ascending request id.
    pub rv: BTreeMap<VehicleId, Vec<(RequestId, f64)>>,
}

impl ShareabilityGraph {
    pub fn shareable(&self, a: RequestId, b: RequestId) -> bool {
        self.rr.contains(&(a.min(b), a.max(b)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trip {
    pub vehicle: VehicleId,
    /// Sorted ascending.
    pub requests: Vec<RequestId>,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TripCatalog {
    /// Ordered by vehicle, then size, then request ids.
    pub trips: Vec<Trip>,
    /// False when the enumeration deadline cut generation short.
    pub complete: bool,
}

impl TripCatalog {
    pub fn contains(&self, vehicle: VehicleId, requests: &[RequestId]) -> bool {
        self.trips
            .iter()
            .any(|t| t.vehicle == vehicle && t.requests == requests)
    }

    pub fn max_size(&self) -> usize {
        self.trips.iter().map(|t| t.requests.len()).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RtvOptions {
    /// Trip enumeration budget; `None` enumerates every clique.
    pub timeout: Option<Duration>,
    pub bnb: BnbOptions,
}

pub fn build_shareability_graph(inst: &EpochInstance, oracle: &dyn TripOracle) -> ShareabilityGraph {
    let ids = inst.request_ids();
    let pairs: Vec<(RequestId, RequestId)> = ids
        .iter()
        .enumerate()
        .flat_map(|(i, &a)| ids[i + 1..].iter().map(move |&b| (a, b)))
        .collect();
    let rr: BTreeSet<_> = pairs
        .par_iter()
        .filter(|&&(a, b)| oracle.shareable(a, b))
        .copied()
        .collect::<Vec<_>>()
        .into_iter()
        .collect();
    let rv: BTreeMap<_, _> = inst
        .vehicles
        .par_iter()
        .map(|&v| {
            let edges: Vec<(RequestId, f64)> = ids
                .iter()
                .filter_map(|&r| oracle.trip_cost(v, &[r]).map(|c| (r, c)))
                .collect();
            (v, edges)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect();
    ShareabilityGraph { rr, rv }
}

fn expand_vehicle(
    v: VehicleId,
    graph: &ShareabilityGraph,
    oracle: &dyn TripOracle,
    max_size: usize,
    deadline: Option<Instant>,
    expired: &AtomicBool,
) -> Vec<Trip> {
    let singles = graph.rv.get(&v).cloned().unwrap_or_default();
    let mut out: Vec<Trip> = singles
        .iter()
        .map(|&(r, c)| Trip {
            vehicle: v,
            requests: vec![r],
            cost: c,
        })
        .collect();
    let mut prev: Vec<Vec<RequestId>> = singles.iter().map(|&(r, _)| vec![r]).collect();
    for _size in 2..=max_size {
        if prev.is_empty() {
            break;
        }
        let prev_set: HashSet<&Vec<RequestId>> = prev.iter().collect();
        let mut next: Vec<Vec<RequestId>> = Vec::new();
        'outer: for t in &prev {
            let last = *t.last().unwrap();
            for &(r, _) in &singles {
                if r <= last || !t.iter().all(|&x| graph.shareable(x, r)) {
                    continue;
                }
                let mut cand = t.clone();
                cand.push(r);
                let subsets_ok = (0..t.len()).all(|skip| {
                    let sub: Vec<RequestId> = cand
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != skip)
                        .map(|(_, &x)| x)
                        .collect();
                    prev_set.contains(&sub)
                });
                if !subsets_ok {
                    continue;
                }
                if expired.load(Ordering::Relaxed) || deadline.map_or(false, |d| Instant::now() >= d) {
                    expired.store(true, Ordering::Relaxed);
                    break 'outer;
                }
                if let Some(c) = oracle.trip_cost(v, &cand) {
                    out.push(Trip {
                        vehicle: v,
                        requests: cand.clone(),
                        cost: c,
                    });
                    next.push(cand);
                }
            }
        }
        prev = next;
        if expired.load(Ordering::Relaxed) {
            break;
        }
    }
    out
}

/// Size-incremental trip enumeration. With a deadline, generation stops once
/// it passes; the in-flight oracle call completes.
pub fn enumerate_trips(
    inst: &EpochInstance,
    graph: &ShareabilityGraph,
    oracle: &dyn TripOracle,
    deadline: Option<Instant>,
) -> TripCatalog {
    let expired = AtomicBool::new(false);
    let per_vehicle: Vec<Vec<Trip>> = inst
        .vehicles
        .par_iter()
        .map(|&v| expand_vehicle(v, graph, oracle, inst.max_trip_size, deadline, &expired))
        .collect();
    let mut trips: Vec<Trip> = per_vehicle.into_iter().flatten().collect();
    trips.sort_by(|a, b| {
        (a.vehicle, a.requests.len(), &a.requests).cmp(&(b.vehicle, b.requests.len(), &b.requests))
    });
    TripCatalog {
        trips,
        complete: !expired.load(Ordering::Relaxed),
    }
}

/// Adds each vehicle's held request set as a trip when missing so the
/// must-serve rows stay satisfiable. Returns vehicles whose held set is not
/// servable at all.
pub(crate) fn ensure_held_trips(
    inst: &EpochInstance,
    oracle: &dyn TripOracle,
    catalog: &mut Vec<Trip>,
) -> BTreeSet<RequestId> {
    let mut unservable = BTreeSet::new();
    for &v in &inst.vehicles {
        let held = inst.held(v);
        if held.is_empty() || catalog.iter().any(|t| t.vehicle == v && t.requests == held) {
            continue;
        }
        match oracle.trip_cost(v, &held) {
            Some(c) => catalog.push(Trip {
                vehicle: v,
                requests: held,
                cost: c,
            }),
            None => unservable.extend(held),
        }
    }
    unservable
}

/// Builds and solves the epoch ILP over `trips`.
pub(crate) fn trip_ilp(
    inst: &EpochInstance,
    trips: &[Trip],
    relaxed_held: &BTreeSet<RequestId>,
) -> LpProblem {
    let mut lp = LpProblem::new(Sense::Min);
    let mut by_vehicle: BTreeMap<VehicleId, Vec<(usize, f64)>> = BTreeMap::new();
    let mut by_request: BTreeMap<RequestId, Vec<(usize, f64)>> = BTreeMap::new();
    for (i, t) in trips.iter().enumerate() {
        let j = lp.add_var(format!("x{i}"), t.cost, 1.0);
        by_vehicle.entry(t.vehicle).or_default().push((j, 1.0));
        for &r in &t.requests {
            by_request.entry(r).or_default().push((j, 1.0));
        }
    }
    for &v in &inst.vehicles {
        lp.add_row(by_vehicle.remove(&v).unwrap_or_default(), Cmp::Le, 1.0);
    }
    for r in &inst.requests {
        let mut row = by_request.remove(&r.id).unwrap_or_default();
        if r.held_by.is_none() || relaxed_held.contains(&r.id) {
            let y = lp.add_var(format!("y{}", r.id), inst.penalty_of(r.id), 1.0);
            row.push((y, 1.0));
        }
        lp.add_row(row, Cmp::Eq, 1.0);
    }
    lp
}

pub(crate) fn solution_from_trips(
    inst: &EpochInstance,
    oracle: &dyn TripOracle,
    trips: &[Trip],
    chosen: &[usize],
) -> AssignmentSolution {
    let mut map: BTreeMap<VehicleId, Vec<RequestId>> = BTreeMap::new();
    for &j in chosen {
        if j < trips.len() {
            map.insert(trips[j].vehicle, trips[j].requests.clone());
        }
    }
    let relaxed = inst_without_held(inst);
    evaluate(&relaxed, oracle, &map).expect("ILP solutions satisfy the assignment rules")
}

/// Held requests become ordinary ones; used when scoring ILP outcomes in
/// which an unservable held request had to be dropped.
fn inst_without_held(inst: &EpochInstance) -> EpochInstance {
    let mut out = inst.clone();
    for r in out.requests.iter_mut() {
        r.held_by = None;
    }
    out
}

pub fn rtv_assign(inst: &EpochInstance, oracle: &dyn TripOracle, opts: &RtvOptions) -> AssignmentSolution {
    let graph = build_shareability_graph(inst, oracle);
    let deadline = opts.timeout.map(|d| Instant::now() + d);
    let catalog = enumerate_trips(inst, &graph, oracle, deadline);
    let mut trips = catalog.trips;
    let relaxed = ensure_held_trips(inst, oracle, &mut trips);
    let lp = trip_ilp(inst, &trips, &relaxed);
    let sol = bnb_solve_with(&lp, &opts.bnb);
    solution_from_trips(inst, oracle, &trips, &sol.ones())
}
