//! Capacitated routing of a single vehicle through pickup and dropoff stops
//! under deadlines: exact search plus insertion, order-preserving (OOF) and
//! limited re-planning (LRP) heuristics.

mod search;

use std::collections::BTreeMap;

use crate::model::{
    plan_route, route_cost, schedule, Request, Route, RouteStart, Stop, StopKey, StopKind,
    VehicleId, VehicleState,
};
use crate::network::Network;
use search::{search, SearchProblem};

pub use search::MAX_SEARCH_STOPS;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtspMode {
    Exact,
    Insertion,
    Oof,
    Lrp,
}

impl std::str::FromStr for CtspMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exact" => Ok(CtspMode::Exact),
            "insertion" => Ok(CtspMode::Insertion),
            "oof" => Ok(CtspMode::Oof),
            "lrp" => Ok(CtspMode::Lrp),
            other => Err(format!("unknown ctsp mode `{other}`")),
        }
    }
}

impl std::fmt::Display for CtspMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CtspMode::Exact => "exact",
            CtspMode::Insertion => "insertion",
            CtspMode::Oof => "oof",
            CtspMode::Lrp => "lrp",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtspPolicy {
    pub mode: CtspMode,
    /// Stop count above which the heuristic of `mode` takes over.
    pub enumerate_limit: usize,
    /// Node budget of LRP re-planning.
    pub lrp_eta: usize,
    pub follower_pruning: bool,
}

impl Default for CtspPolicy {
    fn default() -> Self {
        CtspPolicy {
            mode: CtspMode::Oof,
            enumerate_limit: 12,
            lrp_eta: 12,
            follower_pruning: true,
        }
    }
}

/// A vehicle and the requests to add to its committed route.
#[derive(Debug, Clone, Copy)]
pub struct CtspQuery<'a> {
    pub net: &'a Network,
    pub vehicle: &'a VehicleState,
    pub new_requests: &'a [Request],
    pub now: f64,
}

impl<'a> CtspQuery<'a> {
    pub fn new(
        net: &'a Network,
        vehicle: &'a VehicleState,
        new_requests: &'a [Request],
        now: f64,
    ) -> Self {
        CtspQuery {
            net,
            vehicle,
            new_requests,
            now,
        }
    }

    fn start(&self) -> RouteStart {
        self.vehicle.start(self.now)
    }

    fn new_stops(&self) -> Vec<Stop> {
        let mut out = Vec::with_capacity(2 * self.new_requests.len());
        for r in self.new_requests {
            out.push(r.pickup_stop());
            out.push(r.dropoff_stop(self.net));
        }
        out
    }

    /// Onboard plus yet-to-board requests, new ones included.
    pub fn request_count(&self) -> usize {
        self.vehicle.route.requests().len() + self.new_requests.len()
    }

    /// Committed plus new stops.
    pub fn stop_count(&self) -> usize {
        self.vehicle.route.len() + 2 * self.new_requests.len()
    }

    fn all_stops_sorted(&self) -> Vec<Stop> {
        let mut all = self.vehicle.route.stops.clone();
        all.extend(self.new_stops());
        all.sort_by_key(|s| s.key());
        all
    }
}

/// Checks a complete stop sequence against deadlines and capacity.
pub fn feasible(net: &Network, vehicle: &VehicleState, stops: &[Stop], now: f64) -> bool {
    schedule(net, vehicle.start(now), stops).is_some()
}

fn run_search(
    net: &Network,
    start: RouteStart,
    stops: &[Stop],
    chains: &[Vec<usize>],
    follower_pruning: bool,
) -> Option<Vec<Stop>> {
    let problem = SearchProblem {
        net,
        start,
        stops,
        chains,
        use_followers: follower_pruning,
    };
    let (order, _) = search(&problem)?;
    Some(order.into_iter().map(|i| stops[i].clone()).collect())
}

/// Minimum-travel feasible ordering of all committed and new stops.
pub fn solve_exact(q: &CtspQuery, follower_pruning: bool) -> Option<Route> {
    let stops = q.all_stops_sorted();
    let ordered = run_search(q.net, q.start(), &stops, &[], follower_pruning)?;
    plan_route(q.net, q.start(), ordered)
}

/// Result of sequential cheapest insertion.
#[derive(Debug, Clone, PartialEq)]
pub struct InsertionOutcome {
    pub route: Option<Route>,
    /// Sequence built before the first stop that could not be placed.
    pub partial: Vec<StopKey>,
}

/// Builds a route by inserting every stop, in ascending key order, at its
/// cheapest feasible position.
pub fn insertion(q: &CtspQuery) -> Option<Route> {
    let order: Vec<StopKey> = q.all_stops_sorted().iter().map(|s| s.key()).collect();
    insertion_with_order(q, &order).route
}

/// Cheapest insertion following an explicit stop order. Keys not present in
/// the query are ignored; a pickup listed after its dropoff is moved ahead.
pub fn insertion_with_order(q: &CtspQuery, order: &[StopKey]) -> InsertionOutcome {
    let pool = q.all_stops_sorted();
    let mut keys: Vec<StopKey> = Vec::with_capacity(pool.len());
    for &k in order {
        if pool.iter().any(|s| s.key() == k) && !keys.contains(&k) {
            if k.1 == StopKind::Dropoff {
                let pk = (k.0, StopKind::Pickup);
                let listed_pickup = pool.iter().any(|s| s.key() == pk);
                if listed_pickup && !keys.contains(&pk) {
                    keys.push(pk);
                }
            }
            keys.push(k);
        }
    }
    let start = q.start();
    let mut seq: Vec<Stop> = Vec::with_capacity(keys.len());
    for k in &keys {
        let stop = pool.iter().find(|s| s.key() == *k).unwrap().clone();
        let mut best: Option<(usize, f64)> = None;
        for pos in 0..=seq.len() {
            let mut trial = seq.clone();
            trial.insert(pos, stop.clone());
            if let Some((_, cost)) = schedule(q.net, start, &trial) {
                if best.map_or(true, |(_, c)| cost < c - 1e-9) {
                    best = Some((pos, cost));
                }
            }
        }
        match best {
            Some((pos, _)) => seq.insert(pos, stop),
            None => {
                return InsertionOutcome {
                    route: None,
                    partial: seq.iter().map(|s| s.key()).collect(),
                }
            }
        }
    }
    let partial = seq.iter().map(|s| s.key()).collect();
    InsertionOutcome {
        route: plan_route(q.net, start, seq),
        partial,
    }
}

/// Exact when at most `threshold` requests are onboard or yet to board,
/// otherwise keeps the committed stops in their current order and places the
/// new stops around them.
pub fn oof(q: &CtspQuery, threshold: usize) -> Option<Route> {
    if q.request_count() <= threshold {
        solve_exact(q, true)
    } else {
        oof_heuristic(q)
    }
}

pub fn oof_heuristic(q: &CtspQuery) -> Option<Route> {
    let stops = q.all_stops_sorted();
    let chain: Vec<usize> = q
        .vehicle
        .route
        .stops
        .iter()
        .map(|c| stops.iter().position(|s| s.key() == c.key()).unwrap())
        .collect();
    let ordered = run_search(q.net, q.start(), &stops, &[chain], true)?;
    plan_route(q.net, q.start(), ordered)
}

/// Last computed stop order per vehicle.
#[derive(Debug, Clone, Default)]
pub struct RouteMemory {
    routes: BTreeMap<VehicleId, Vec<StopKey>>,
}

impl RouteMemory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn remember(&mut self, vehicle: VehicleId, route: &Route) {
        self.routes.insert(vehicle, route.keys());
    }

    pub fn recall(&self, vehicle: VehicleId) -> Option<&[StopKey]> {
        self.routes.get(&vehicle).map(|v| v.as_slice())
    }

    pub fn forget(&mut self, vehicle: VehicleId) {
        self.routes.remove(&vehicle);
    }
}

/// Exact when at most `eta` stops are involved. Otherwise the recalled route
/// is split: a prefix is kept verbatim and the last `eta - new` stops are
/// re-planned together with the new stops, keeping their relative order.
pub fn lrp(q: &CtspQuery, eta: usize, memory: &RouteMemory) -> Option<Route> {
    if q.stop_count() <= eta {
        solve_exact(q, true)
    } else {
        lrp_heuristic(q, eta, memory)
    }
}

pub fn lrp_heuristic(q: &CtspQuery, eta: usize, memory: &RouteMemory) -> Option<Route> {
    let committed = &q.vehicle.route.stops;
    let mut recalled: Vec<Stop> = Vec::with_capacity(committed.len());
    if let Some(keys) = memory.recall(q.vehicle.id) {
        for k in keys {
            if let Some(s) = committed.iter().find(|s| s.key() == *k) {
                recalled.push(s.clone());
            }
        }
    }
    for s in committed {
        if !recalled.iter().any(|r| r.key() == s.key()) {
            recalled.push(s.clone());
        }
    }
    let n_new = 2 * q.new_requests.len();
    if n_new > eta {
        return None;
    }
    let suffix_len = (eta - n_new).min(recalled.len());
    let split = recalled.len() - suffix_len;
    let (prefix, suffix) = recalled.split_at(split);

    let start = q.start();
    let (mid_start, picked) = if prefix.is_empty() {
        (start, Vec::new())
    } else {
        let (times, _) = schedule(q.net, start, prefix)?;
        let mut load = start.load as i64;
        let mut picked = Vec::new();
        for (s, &t) in prefix.iter().zip(&times) {
            match s.kind {
                StopKind::Pickup => {
                    load += 1;
                    picked.push((s.request, t));
                }
                StopKind::Dropoff => load -= 1,
            }
        }
        let mid = RouteStart {
            node: prefix.last().unwrap().node,
            time: *times.last().unwrap(),
            capacity: start.capacity,
            load: load as u32,
        };
        (mid, picked)
    };

    let mut tail: Vec<Stop> = suffix
        .iter()
        .map(|s| {
            let mut s = s.clone();
            if s.kind == StopKind::Dropoff {
                if let Some(&(_, tp)) = picked.iter().find(|(r, _)| *r == s.request) {
                    s.deadline = tp + s.ride_limit;
                    s.ride_limit = 0.0;
                }
            }
            s
        })
        .collect();
    tail.extend(q.new_stops());
    tail.sort_by_key(|s| s.key());
    let chain: Vec<usize> = suffix
        .iter()
        .map(|c| tail.iter().position(|s| s.key() == c.key()).unwrap())
        .collect();
    let ordered_tail = run_search(q.net, mid_start, &tail, &[chain], true)?;

    let mut stops: Vec<Stop> = prefix.to_vec();
    for s in ordered_tail {
        // restore the original stop record so deadlines are recomputed
        let original = suffix.iter().find(|o| o.key() == s.key()).cloned();
        stops.push(original.unwrap_or(s));
    }
    plan_route(q.net, start, stops)
}

/// Trip route and incremental cost for adding `q.new_requests`.
/// Infeasible trips return `(None, +inf)`.
pub fn oracle(q: &CtspQuery, policy: &CtspPolicy, memory: Option<&RouteMemory>) -> (Option<Route>, f64) {
    if q.new_requests.is_empty() {
        return (Some(q.vehicle.route.clone()), 0.0);
    }
    if q.stop_count() > MAX_SEARCH_STOPS {
        return (None, f64::INFINITY);
    }
    let limit = policy.enumerate_limit;
    let route = match policy.mode {
        CtspMode::Exact => solve_exact(q, policy.follower_pruning),
        CtspMode::Insertion if q.stop_count() <= limit => solve_exact(q, policy.follower_pruning),
        CtspMode::Insertion => insertion(q),
        CtspMode::Oof if q.stop_count() <= limit => solve_exact(q, policy.follower_pruning),
        CtspMode::Oof => oof_heuristic(q),
        CtspMode::Lrp if q.stop_count() <= policy.lrp_eta => solve_exact(q, policy.follower_pruning),
        CtspMode::Lrp => {
            let empty = RouteMemory::new();
            lrp_heuristic(q, policy.lrp_eta, memory.unwrap_or(&empty))
        }
    };
    match route {
        Some(r) => {
            let cost = route_cost(q.net, q.vehicle, &r) - route_cost(q.net, q.vehicle, &q.vehicle.route);
            (Some(r), cost)
        }
        None => (None, f64::INFINITY),
    }
}
