//! Multi-epoch fleet simulation: batching, assignment, rebalancing,
//! vehicle movement, metrics and the event log.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write};
use std::time::Instant;

use crate::assign::{assign, Algorithm, AssignOptions};
use crate::config::SimConfig;
use crate::ctsp::{CtspMode, RouteMemory};
use crate::epoch::{CtspTripOracle, EpochInstance, EpochRequest, TripOracle};
use crate::model::{plan_route, EventKind, Request, RequestId, Route, VehicleId, VehicleState};
use crate::network::{Network, NodeId};
use crate::rebalance::rebalance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EventType {
    Arrival,
    Assignment,
    Reassignment,
    Pickup,
    Dropoff,
    Relocation,
    Expiry,
}

impl fmt::Display for EventType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventType::Arrival => "arrival",
            EventType::Assignment => "assignment",
            EventType::Reassignment => "reassignment",
            EventType::Pickup => "pickup",
            EventType::Dropoff => "dropoff",
            EventType::Relocation => "relocation",
            EventType::Expiry => "expiry",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventType,
    pub request: Option<RequestId>,
    pub vehicle: Option<VehicleId>,
    pub node: Option<NodeId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Pending,
    Assigned(VehicleId),
    Onboard(VehicleId),
    Served,
    Expired,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochReport {
    pub epoch: usize,
    pub time: f64,
    pub new_requests: usize,
    pub carried: usize,
    pub held: usize,
    /// Requests assigned for the first time in this epoch.
    pub assigned: usize,
    pub reassigned: usize,
    pub unserved: usize,
    pub objective: f64,
    pub runtime_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub algo: Algorithm,
    pub requests: usize,
    pub served: usize,
    pub expired: usize,
    pub pending: usize,
    pub service_rate: f64,
    /// Set when there were no requests; `service_rate` is then 1.
    pub zero_demand: bool,
    pub vmt_m: f64,
    pub shared_rate: f64,
    pub runtime_s: f64,
}

pub struct SimOutput {
    pub metrics: Metrics,
    pub epochs: Vec<EpochReport>,
    pub events: Vec<Event>,
}

pub struct Simulator<'a> {
    net: &'a Network,
    cfg: SimConfig,
    opts: AssignOptions,
    requests: Vec<Request>,
    index: BTreeMap<RequestId, usize>,
    vehicles: Vec<VehicleState>,
    status: BTreeMap<RequestId, Status>,
    first_seen: BTreeMap<RequestId, f64>,
    next_arrival: usize,
    memory: RouteMemory,
    events: Vec<Event>,
    epochs: Vec<EpochReport>,
    pickups: BTreeMap<RequestId, f64>,
    rides: Vec<(VehicleId, f64, f64)>,
    runtime: f64,
}

impl<'a> Simulator<'a> {
    /// Requests emerging after the horizon are ignored.
    pub fn new(net: &'a Network, cfg: SimConfig, requests: &[Request], vehicles: Vec<VehicleState>) -> Self {
        let mut requests: Vec<Request> = requests
            .iter()
            .filter(|r| r.emergence <= cfg.horizon)
            .cloned()
            .collect();
        requests.sort_by(|a, b| a.emergence.total_cmp(&b.emergence).then(a.id.cmp(&b.id)));
        let index = requests.iter().enumerate().map(|(i, r)| (r.id, i)).collect();
        let mut vehicles = vehicles;
        vehicles.sort_by_key(|v| v.id);
        Simulator {
            net,
            opts: cfg.assign_options(),
            cfg,
            requests,
            index,
            vehicles,
            status: BTreeMap::new(),
            first_seen: BTreeMap::new(),
            next_arrival: 0,
            memory: RouteMemory::new(),
            events: Vec::new(),
            epochs: Vec::new(),
            pickups: BTreeMap::new(),
            rides: Vec::new(),
            runtime: 0.0,
        }
    }

    fn request(&self, id: RequestId) -> &Request {
        &self.requests[self.index[&id]]
    }

    fn push(&mut self, time: f64, kind: EventType, request: Option<RequestId>, vehicle: Option<VehicleId>, node: Option<NodeId>) {
        self.events.push(Event { time, kind, request, vehicle, node });
    }

    pub fn epoch_count(&self) -> usize {
        (self.cfg.horizon / self.cfg.interval).ceil() as usize
    }

    fn arrivals(&mut self, now: f64) -> Vec<RequestId> {
        let mut new = Vec::new();
        while self.next_arrival < self.requests.len()
            && self.requests[self.next_arrival].emergence <= now + self.cfg.future_window
        {
            let r = self.requests[self.next_arrival].clone();
            self.next_arrival += 1;
            let seen = r.emergence.min(now);
            self.first_seen.insert(r.id, seen);
            self.push(seen, EventType::Arrival, Some(r.id), None, Some(r.origin));
            self.status.insert(r.id, Status::Pending);
            new.push(r.id);
        }
        new
    }

    fn expire(&mut self, now: f64) {
        let expired: Vec<RequestId> = self
            .status
            .iter()
            .filter(|(id, s)| **s == Status::Pending && self.request(**id).latest_boarding() < now)
            .map(|(&id, _)| id)
            .collect();
        for id in expired {
            let r = self.request(id);
            let (t, node) = (r.latest_boarding(), r.origin);
            self.status.insert(id, Status::Expired);
            self.push(t, EventType::Expiry, Some(id), None, Some(node));
        }
    }

    /// Vehicle copy without the stops of promised, unboarded requests.
    fn stripped(&self, v: &VehicleState, held: &BTreeSet<RequestId>, now: f64) -> VehicleState {
        let stops: Vec<_> = v
            .route
            .stops
            .iter()
            .filter(|s| !held.contains(&s.request))
            .cloned()
            .collect();
        let mut out = v.clone();
        out.route = plan_route(self.net, v.start(now), stops.clone()).unwrap_or_else(|| {
            let times = v
                .route
                .stops
                .iter()
                .zip(&v.route.times)
                .filter(|(s, _)| !held.contains(&s.request))
                .map(|(_, &t)| t)
                .collect();
            Route { stops, times }
        });
        out
    }

    /// Runs one decision epoch at `now` and advances vehicles to `until`.
    pub fn step_epoch(&mut self, e: usize, now: f64, until: f64) {
        let new = self.arrivals(now);
        self.expire(now);
        let new_set: BTreeSet<RequestId> = new.iter().copied().collect();
        let reassign = self.cfg.reassigns();

        let mut epoch_requests: Vec<EpochRequest> = Vec::new();
        let mut held_by: BTreeMap<VehicleId, BTreeSet<RequestId>> = BTreeMap::new();
        for (&id, &s) in &self.status {
            match s {
                Status::Pending => epoch_requests.push(EpochRequest {
                    id,
                    carried: !new_set.contains(&id),
                    held_by: None,
                }),
                Status::Assigned(v) if reassign => {
                    held_by.entry(v).or_default().insert(id);
                    epoch_requests.push(EpochRequest { id, carried: false, held_by: Some(v) });
                }
                _ => {}
            }
        }
        let carried = epoch_requests.iter().filter(|r| r.carried).count();
        let held = epoch_requests.iter().filter(|r| r.held_by.is_some()).count();

        let base: Vec<VehicleState> = self
            .vehicles
            .iter()
            .map(|v| match held_by.get(&v.id) {
                Some(h) => self.stripped(v, h, now),
                None => v.clone(),
            })
            .collect();
        let reqs: Vec<Request> = epoch_requests.iter().map(|r| self.request(r.id).clone()).collect();
        let mut oracle = CtspTripOracle::new(self.net, now, self.cfg.ctsp, base, reqs);
        for v in &self.vehicles {
            if let Some(h) = held_by.get(&v.id) {
                oracle = oracle.with_fallback(v.id, h.iter().copied().collect(), v.route.clone());
            }
        }
        if self.cfg.ctsp.mode == CtspMode::Lrp {
            oracle = oracle.with_memory(&self.memory);
        }
        let inst = EpochInstance {
            now,
            vehicles: self.vehicles.iter().map(|v| v.id).collect(),
            requests: epoch_requests,
            penalty: self.cfg.penalty,
            kappa: self.cfg.kappa,
            max_trip_size: self.vehicles.iter().map(|v| v.capacity as usize).max().unwrap_or(0),
        };
        let started = Instant::now();
        let sol = if inst.requests.is_empty() {
            Default::default()
        } else {
            assign(self.cfg.algo, &inst, &oracle, &self.opts)
        };
        let runtime = started.elapsed().as_secs_f64();
        self.runtime += runtime;

        let mut routes: Vec<(usize, Route)> = Vec::new();
        for (i, v) in self.vehicles.iter().enumerate() {
            let set = sol.trips.get(&v.id).cloned().unwrap_or_default();
            if set.is_empty() && !held_by.contains_key(&v.id) {
                continue;
            }
            let route = oracle
                .trip_route(v.id, &set)
                .expect("selected trips have routes");
            routes.push((i, route));
        }
        drop(oracle);
        let (mut assigned, mut reassigned) = (0, 0);
        for (&v, set) in &sol.trips {
            for &r in set {
                match self.status[&r] {
                    Status::Pending => {
                        assigned += 1;
                        self.push(now, EventType::Assignment, Some(r), Some(v), None);
                    }
                    Status::Assigned(w) if w != v => {
                        reassigned += 1;
                        self.push(now, EventType::Reassignment, Some(r), Some(v), None);
                    }
                    _ => {}
                }
                self.status.insert(r, Status::Assigned(v));
            }
        }
        for (i, route) in routes {
            self.memory.remember(self.vehicles[i].id, &route);
            self.vehicles[i].set_route(route, now);
        }

        let pending: Vec<RequestId> = self
            .status
            .iter()
            .filter(|(id, s)| **s == Status::Pending && self.request(**id).emergence <= now)
            .map(|(&id, _)| id)
            .collect();
        if self.cfg.rebalance {
            let idle: Vec<&VehicleState> = self.vehicles.iter().filter(|v| v.route.is_empty()).collect();
            let unserved: Vec<&Request> = pending.iter().map(|&id| self.request(id)).collect();
            let plan = rebalance(self.net, &idle, &unserved);
            for (vid, target) in plan.moves {
                let v = self.vehicles.iter_mut().find(|v| v.id == vid).unwrap();
                if v.relocation != Some(target) && v.node != target {
                    v.relocate(target, now);
                    self.push(now, EventType::Relocation, None, Some(vid), Some(target));
                }
            }
        }

        self.epochs.push(EpochReport {
            epoch: e,
            time: now,
            new_requests: new.len(),
            carried,
            held,
            assigned,
            reassigned,
            unserved: sol.unserved.len(),
            objective: sol.objective,
            runtime_s: runtime,
        });
        self.advance(until);
    }

    fn advance(&mut self, until: f64) {
        let mut all = Vec::new();
        for v in &mut self.vehicles {
            all.extend(v.advance(self.net, until));
        }
        all.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.vehicle.cmp(&b.vehicle)));
        for ev in all {
            match ev.kind {
                EventKind::Pickup => {
                    self.status.insert(ev.request, Status::Onboard(ev.vehicle));
                    self.pickups.insert(ev.request, ev.time);
                    self.push(ev.time, EventType::Pickup, Some(ev.request), Some(ev.vehicle), Some(ev.node));
                }
                EventKind::Dropoff => {
                    self.status.insert(ev.request, Status::Served);
                    if let Some(&p) = self.pickups.get(&ev.request) {
                        self.rides.push((ev.vehicle, p, ev.time));
                    }
                    self.push(ev.time, EventType::Dropoff, Some(ev.request), Some(ev.vehicle), Some(ev.node));
                }
            }
        }
    }

    pub fn run(mut self) -> SimOutput {
        let n = self.epoch_count();
        for e in 0..n {
            let now = ((e + 1) as f64 * self.cfg.interval).min(self.cfg.horizon);
            let until = if e + 1 == n { now } else { ((e + 2) as f64 * self.cfg.interval).min(self.cfg.horizon) };
            self.step_epoch(e, now, until);
        }
        // finish committed routes; relocations are abandoned
        for v in &mut self.vehicles {
            v.relocation = None;
        }
        self.advance(f64::INFINITY);
        self.finish()
    }

    fn finish(mut self) -> SimOutput {
        let count = |s: &dyn Fn(&Status) -> bool| self.status.values().filter(|x| s(x)).count();
        let served = count(&|s| *s == Status::Served);
        let expired = count(&|s| *s == Status::Expired);
        let pending = count(&|s| matches!(s, Status::Pending));
        let total = self.requests.len();
        let shared = shared_count(&self.rides);
        let metrics = Metrics {
            algo: self.cfg.algo,
            requests: total,
            served,
            expired,
            pending: pending + (total - self.status.len()),
            service_rate: if total == 0 { 1.0 } else { served as f64 / total as f64 },
            zero_demand: total == 0,
            vmt_m: self.vehicles.iter().map(|v| v.distance).sum(),
            shared_rate: if served == 0 { 0.0 } else { shared as f64 / served as f64 },
            runtime_s: self.runtime,
        };
        debug_assert_eq!(served + expired + metrics.pending, total);
        let mut events = std::mem::take(&mut self.events);
        events.sort_by(|a, b| a.time.total_cmp(&b.time));
        SimOutput {
            metrics,
            epochs: std::mem::take(&mut self.epochs),
            events,
        }
    }
}

/// Rides overlapping another ride in the same vehicle.
fn shared_count(rides: &[(VehicleId, f64, f64)]) -> usize {
    let mut by_vehicle: BTreeMap<VehicleId, Vec<(f64, f64)>> = BTreeMap::new();
    for &(v, p, d) in rides {
        by_vehicle.entry(v).or_default().push((p, d));
    }
    let mut shared = 0;
    for list in by_vehicle.values() {
        for (i, a) in list.iter().enumerate() {
            if list
                .iter()
                .enumerate()
                .any(|(j, b)| i != j && a.0 < b.1 && b.0 < a.1)
            {
                shared += 1;
            }
        }
    }
    shared
}

pub fn run_simulation(net: &Network, cfg: &SimConfig, requests: &[Request], vehicles: &[VehicleState]) -> SimOutput {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .expect("thread pool");
    pool.install(|| Simulator::new(net, cfg.clone(), requests, vehicles.to_vec()).run())
}

/// Checks time windows, ride limits and per-request event order.
pub fn audit(net: &Network, requests: &[Request], events: &[Event]) -> Vec<String> {
    const EPS: f64 = 1e-6;
    let by_id: BTreeMap<RequestId, &Request> = requests.iter().map(|r| (r.id, r)).collect();
    let mut seen: BTreeMap<RequestId, Vec<&Event>> = BTreeMap::new();
    for e in events {
        if let Some(r) = e.request {
            seen.entry(r).or_default().push(e);
        }
    }
    let mut out = Vec::new();
    for (id, evs) in seen {
        let Some(r) = by_id.get(&id) else {
            out.push(format!("request {id}: not in input"));
            continue;
        };
        let time_of = |k: EventType| evs.iter().find(|e| e.kind == k).map(|e| e.time);
        let arrival = time_of(EventType::Arrival);
        let assigned = time_of(EventType::Assignment);
        let pickup = time_of(EventType::Pickup);
        let dropoff = time_of(EventType::Dropoff);
        let expiry = time_of(EventType::Expiry);
        if arrival.is_none() {
            out.push(format!("request {id}: no arrival"));
        }
        if let Some(p) = pickup {
            if assigned.map_or(true, |a| a > p + EPS) || arrival.map_or(true, |a| a > p + EPS) {
                out.push(format!("request {id}: pickup before assignment"));
            }
            if p < r.emergence - EPS || p > r.latest_boarding() + EPS {
                out.push(format!("request {id}: pickup at {p:.3} outside window"));
            }
            if expiry.is_some() {
                out.push(format!("request {id}: picked up and expired"));
            }
            match dropoff {
                Some(d) if d > p + r.ride_limit(net) + EPS => {
                    out.push(format!("request {id}: ride {:.3} exceeds limit", d - p))
                }
                Some(d) if d <= p => out.push(format!("request {id}: dropoff before pickup")),
                _ => {}
            }
        } else if dropoff.is_some() {
            out.push(format!("request {id}: dropoff without pickup"));
        }
        if let (Some(a), Some(s)) = (arrival, assigned) {
            if s < a - EPS {
                out.push(format!("request {id}: assigned before arrival"));
            }
        }
    }
    out
}

fn opt<T: fmt::Display>(x: Option<T>) -> String {
    x.map_or(String::new(), |v| v.to_string())
}

pub fn events_csv(events: &[Event]) -> String {
    let mut s = String::from("time_s,event,request_id,vehicle_id,node_id\n");
    for e in events {
        let _ = writeln!(
            s,
            "{:.6},{},{},{},{}",
            e.time,
            e.kind,
            opt(e.request),
            opt(e.vehicle),
            opt(e.node)
        );
    }
    s
}

pub fn epochs_csv(epochs: &[EpochReport]) -> String {
    let mut s = String::from(
        "epoch,time_s,new_requests,carried,held,assigned,reassigned,unserved,objective,runtime_s\n",
    );
    for e in epochs {
        let _ = writeln!(
            s,
            "{},{:.6},{},{},{},{},{},{},{:.6},{:.6}",
            e.epoch, e.time, e.new_requests, e.carried, e.held, e.assigned, e.reassigned, e.unserved, e.objective, e.runtime_s
        );
    }
    s
}

pub const METRICS_HEADER: &str =
    "algo,requests,served,expired,pending,service_rate,vmt_m,shared_rate,zero_demand,runtime_s";

pub fn metrics_row(m: &Metrics) -> String {
    format!(
        "{},{},{},{},{},{:.6},{:.6},{:.6},{},{:.6}",
        m.algo, m.requests, m.served, m.expired, m.pending, m.service_rate, m.vmt_m, m.shared_rate, m.zero_demand, m.runtime_s
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub metrics: Metrics,
    /// VMT as a percentage of the baseline row (LA when present, else the
    /// first algorithm).
    pub vmt_pct: f64,
}

pub fn compare_algorithms(
    net: &Network,
    cfg: &SimConfig,
    requests: &[Request],
    vehicles: &[VehicleState],
    algos: &[Algorithm],
) -> Vec<ComparisonRow> {
    let runs: Vec<Metrics> = algos
        .iter()
        .map(|&a| {
            let c = SimConfig { algo: a, ..cfg.clone() };
            run_simulation(net, &c, requests, vehicles).metrics
        })
        .collect();
    let base = algos
        .iter()
        .position(|&a| a == Algorithm::La)
        .unwrap_or(0);
    let base_vmt = runs.get(base).map_or(0.0, |m| m.vmt_m);
    runs.into_iter()
        .map(|m| ComparisonRow {
            vmt_pct: if base_vmt > 0.0 { 100.0 * m.vmt_m / base_vmt } else { 100.0 },
            metrics: m,
        })
        .collect()
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut s = format!("{METRICS_HEADER},vmt_pct\n");
    for r in rows {
        let _ = writeln!(s, "{},{:.6}", metrics_row(&r.metrics), r.vmt_pct);
    }
    s
}

#[cfg(test)]
mod tests;
