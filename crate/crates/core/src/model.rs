//! Requests, stops, routes and vehicle state.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::network::{Network, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RequestId(pub u32);

impl fmt::Display for RequestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VehicleId(pub u32);

impl fmt::Display for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("request {0}: origin equals destination")]
    SameOriginDestination(RequestId),
    #[error("request {0}: max wait must be positive")]
    NonPositiveWait(RequestId),
    #[error("request {0}: max detour must be non-negative")]
    NegativeDetour(RequestId),
    #[error("epoch interval must satisfy 0 < interval <= horizon (got {interval}, {horizon})")]
    BadEpoch { interval: f64, horizon: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Request {
    pub id: RequestId,
    pub origin: NodeId,
    pub destination: NodeId,
    /// Time the request becomes visible, seconds.
    pub emergence: f64,
    pub max_wait: f64,
    pub max_detour: f64,
}

impl Request {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.origin == self.destination {
            return Err(ModelError::SameOriginDestination(self.id));
        }
        if !(self.max_wait > 0.0) {
            return Err(ModelError::NonPositiveWait(self.id));
        }
        if !(self.max_detour >= 0.0) {
            return Err(ModelError::NegativeDetour(self.id));
        }
        Ok(())
    }

    pub fn latest_boarding(&self) -> f64 {
        self.emergence + self.max_wait
    }

    /// Longest admissible in-vehicle time: direct travel time plus max detour.
    pub fn ride_limit(&self, net: &Network) -> f64 {
        net.time(self.origin, self.destination) + self.max_detour
    }

    pub fn pickup_stop(&self) -> Stop {
        Stop {
            node: self.origin,
            request: self.id,
            kind: StopKind::Pickup,
            deadline: self.latest_boarding(),
            earliest: self.emergence,
            ride_limit: 0.0,
        }
    }

    /// Dropoff of a not-yet-boarded request; its deadline is set once a
    /// pickup time is planned.
    pub fn dropoff_stop(&self, net: &Network) -> Stop {
        Stop {
            node: self.destination,
            request: self.id,
            kind: StopKind::Dropoff,
            deadline: f64::INFINITY,
            earliest: f64::NEG_INFINITY,
            ride_limit: self.ride_limit(net),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StopKind {
    Pickup,
    Dropoff,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stop {
    pub node: NodeId,
    pub request: RequestId,
    pub kind: StopKind,
    /// Pickup: latest boarding. Dropoff: latest arrival, fixed once boarded.
    pub deadline: f64,
    /// Pickups are not served before the request emerges.
    pub earliest: f64,
    /// In-vehicle time limit applied from the planned pickup (dropoffs only).
    pub ride_limit: f64,
}

impl Stop {
    pub fn onboard_dropoff(request: RequestId, node: NodeId, deadline: f64) -> Stop {
        Stop {
            node,
            request,
            kind: StopKind::Dropoff,
            deadline,
            earliest: f64::NEG_INFINITY,
            ride_limit: 0.0,
        }
    }

    /// Ordering key used for deterministic tie-breaking.
    pub fn key(&self) -> StopKey {
        (self.request, self.kind)
    }
}

pub type StopKey = (RequestId, StopKind);

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Route {
    pub stops: Vec<Stop>,
    /// Planned service time of each stop.
    pub times: Vec<f64>,
}

impl Route {
    pub fn empty() -> Self {
        Route::default()
    }

    pub fn is_empty(&self) -> bool {
        self.stops.is_empty()
    }

    pub fn len(&self) -> usize {
        self.stops.len()
    }

    pub fn keys(&self) -> Vec<StopKey> {
        self.stops.iter().map(Stop::key).collect()
    }

    /// Requests with at least one stop on the route, ascending.
    pub fn requests(&self) -> BTreeSet<RequestId> {
        self.stops.iter().map(|s| s.request).collect()
    }

    pub fn finish_time(&self) -> Option<f64> {
        self.times.last().copied()
    }
}

/// Where a route starts: the node the vehicle is at or heading to, and when
/// it is free to leave it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteStart {
    pub node: NodeId,
    pub time: f64,
    pub capacity: u32,
    pub load: u32,
}

/// Walks `stops` from `start`, returning planned service times and travel
/// cost, or `None` if a deadline, capacity or precedence rule is violated.
/// Dropoffs whose pickup is not on the sequence are treated as onboard.
pub fn schedule(net: &Network, start: RouteStart, stops: &[Stop]) -> Option<(Vec<f64>, f64)> {
    let mut times = Vec::with_capacity(stops.len());
    let mut t = start.time;
    let mut cost = 0.0;
    let mut load = start.load as i64;
    let mut here = start.node;
    let mut picked: Vec<(RequestId, f64)> = Vec::new();
    let mut dropped: Vec<RequestId> = Vec::new();
    for s in stops {
        let leg = net.time(here, s.node);
        if !leg.is_finite() {
            return None;
        }
        cost += leg;
        t += leg;
        match s.kind {
            StopKind::Pickup => {
                t = t.max(s.earliest);
                if t > s.deadline + TIME_EPS || dropped.contains(&s.request) {
                    return None;
                }
                load += 1;
                if load > start.capacity as i64 {
                    return None;
                }
                picked.push((s.request, t));
            }
            StopKind::Dropoff => {
                let deadline = match picked.iter().find(|(r, _)| *r == s.request) {
                    Some(&(_, tp)) => tp + s.ride_limit,
                    None => s.deadline,
                };
                if t > deadline + TIME_EPS {
                    return None;
                }
                load -= 1;
                if load < 0 {
                    return None;
                }
                dropped.push(s.request);
            }
        }
        times.push(t);
        here = s.node;
    }
    Some((times, cost))
}

/// Slack allowed on deadline comparisons, seconds.
pub const TIME_EPS: f64 = 1e-9;

/// Builds a route from an ordered stop list, fixing planned times and the
/// floating dropoff deadlines of requests picked up on the route.
pub fn plan_route(net: &Network, start: RouteStart, stops: Vec<Stop>) -> Option<Route> {
    let (times, _) = schedule(net, start, &stops)?;
    let mut stops = stops;
    let mut picked: Vec<(RequestId, f64)> = Vec::new();
    for (s, &t) in stops.iter_mut().zip(&times) {
        match s.kind {
            StopKind::Pickup => picked.push((s.request, t)),
            StopKind::Dropoff => {
                if let Some(&(_, tp)) = picked.iter().find(|(r, _)| *r == s.request) {
                    s.deadline = tp + s.ride_limit;
                }
            }
        }
    }
    Some(Route { stops, times })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Pickup,
    Dropoff,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleEvent {
    pub time: f64,
    pub vehicle: VehicleId,
    pub request: RequestId,
    pub kind: EventKind,
    pub node: NodeId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    pub id: VehicleId,
    pub capacity: u32,
    /// Node the vehicle is at, or the next node when mid-arc.
    pub node: NodeId,
    /// Arrival time at `node` (or the time it became idle there).
    pub ready_at: f64,
    pub onboard: BTreeSet<RequestId>,
    pub route: Route,
    /// Remaining nodes of the path towards `leg_target`.
    pub leg: VecDeque<NodeId>,
    pub leg_target: Option<NodeId>,
    pub relocation: Option<NodeId>,
    /// Meters driven so far.
    pub distance: f64,
}

impl VehicleState {
    pub fn new(id: VehicleId, node: NodeId, capacity: u32) -> Self {
        VehicleState {
            id,
            capacity,
            node,
            ready_at: 0.0,
            onboard: BTreeSet::new(),
            route: Route::empty(),
            leg: VecDeque::new(),
            leg_target: None,
            relocation: None,
            distance: 0.0,
        }
    }

    pub fn start(&self, now: f64) -> RouteStart {
        RouteStart {
            node: self.node,
            time: self.ready_at.max(now),
            capacity: self.capacity,
            load: self.onboard.len() as u32,
        }
    }

    pub fn is_idle(&self) -> bool {
        self.route.is_empty() && self.relocation.is_none()
    }

    /// Replaces the committed route; cancels any relocation.
    pub fn set_route(&mut self, route: Route, now: f64) {
        self.ready_at = self.ready_at.max(now);
        self.route = route;
        self.relocation = None;
    }

    pub fn relocate(&mut self, target: NodeId, now: f64) {
        debug_assert!(self.route.is_empty());
        self.ready_at = self.ready_at.max(now);
        self.relocation = Some(target);
    }

    /// Moves the vehicle along its plan up to (excluding) simulated time
    /// `until`. Arcs are committed at departure, so a vehicle can end mid-arc
    /// with `ready_at > until`.
    pub fn advance(&mut self, net: &Network, until: f64) -> Vec<VehicleEvent> {
        let mut events = Vec::new();
        loop {
            let t = self.ready_at;
            if t >= until {
                break;
            }
            let target = match self.route.stops.first() {
                Some(stop) => stop.node,
                None => match self.relocation {
                    Some(target) => target,
                    None => break,
                },
            };
            if self.node == target {
                if self.route.is_empty() {
                    self.relocation = None;
                    continue;
                }
                let stop = &self.route.stops[0];
                let service = t.max(stop.earliest);
                if service >= until {
                    break;
                }
                let stop = self.route.stops.remove(0);
                self.route.times.remove(0);
                self.ready_at = service;
                match stop.kind {
                    StopKind::Pickup => {
                        self.onboard.insert(stop.request);
                        if let Some(drop) = self
                            .route
                            .stops
                            .iter_mut()
                            .find(|s| s.request == stop.request && s.kind == StopKind::Dropoff)
                        {
                            drop.deadline = service + drop.ride_limit;
                        }
                    }
                    StopKind::Dropoff => {
                        self.onboard.remove(&stop.request);
                    }
                }
                events.push(VehicleEvent {
                    time: service,
                    vehicle: self.id,
                    request: stop.request,
                    kind: match stop.kind {
                        StopKind::Pickup => EventKind::Pickup,
                        StopKind::Dropoff => EventKind::Dropoff,
                    },
                    node: stop.node,
                });
                continue;
            }
            if self.leg_target != Some(target) || self.leg.is_empty() {
                let path = net
                    .path(self.node, target)
                    .ok()
                    .flatten()
                    .expect("committed routes only visit reachable nodes");
                self.leg = path.node_sequence.into_iter().skip(1).collect();
                self.leg_target = Some(target);
            }
            let next = self.leg.pop_front().expect("non-empty leg");
            let (time, length) = net.arc(self.node, next).expect("path arcs exist");
            self.node = next;
            self.ready_at = t + time;
            self.distance += length;
        }
        events
    }
}

/// Advances a copy of `vehicle` by `dt` seconds from `now`.
pub fn advance_vehicle(
    net: &Network,
    vehicle: &VehicleState,
    dt: f64,
    now: f64,
) -> (VehicleState, Vec<VehicleEvent>) {
    let mut v = vehicle.clone();
    let events = v.advance(net, now + dt);
    (v, events)
}

/// Travel cost of `route` from the vehicle's current anchor node: the leg to
/// the first stop plus all consecutive legs. Empty routes cost zero.
pub fn route_cost(net: &Network, vehicle: &VehicleState, route: &Route) -> f64 {
    stops_cost(net, vehicle.node, &route.stops)
}

pub fn stops_cost(net: &Network, from: NodeId, stops: &[Stop]) -> f64 {
    let mut here = from;
    let mut cost = 0.0;
    for s in stops {
        cost += net.time(here, s.node);
        here = s.node;
    }
    cost
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochConfig {
    pub interval: f64,
    pub horizon: f64,
}

impl EpochConfig {
    pub fn new(interval: f64, horizon: f64) -> Result<Self, ModelError> {
        if !(interval > 0.0 && interval <= horizon) {
            return Err(ModelError::BadEpoch { interval, horizon });
        }
        Ok(EpochConfig { interval, horizon })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchedRequest {
    pub request: Request,
    /// Emerges after the epoch end but inside the visibility window.
    pub future: bool,
}

/// Requests emerging in `(t1, t2 + window]` that can still board at `t2`.
pub fn batch_requests(stream: &[Request], t1: f64, t2: f64, window: f64) -> Vec<BatchedRequest> {
    debug_assert!(t1 < t2);
    stream
        .iter()
        .filter(|r| t1 < r.emergence && r.emergence <= t2 + window && t2 <= r.latest_boarding())
        .map(|r| BatchedRequest { request: r.clone(), future: r.emergence > t2 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(id: u32, t: f64, wait: f64) -> Request {
        Request {
            id: RequestId(id),
            origin: NodeId(0),
            destination: NodeId(1),
            emergence: t,
            max_wait: wait,
            max_detour: 600.0,
        }
    }

    #[test]
    fn batching_examples() {
        let b = batch_requests(&[req(1, 30.0, 300.0)], 0.0, 60.0, 0.0);
        assert_eq!(b.len(), 1);
        assert!(!b[0].future);
        assert!(batch_requests(&[req(1, 30.0, 20.0)], 0.0, 60.0, 0.0).is_empty());
        let b = batch_requests(&[req(1, 90.0, 300.0)], 0.0, 60.0, 60.0);
        assert_eq!(b.len(), 1);
        assert!(b[0].future);
        assert!(batch_requests(&[req(1, 90.0, 300.0)], 0.0, 60.0, 0.0).is_empty());
    }

    #[test]
    fn request_validation() {
        let mut r = req(1, 0.0, 300.0);
        assert!(r.validate().is_ok());
        r.destination = r.origin;
        assert_eq!(r.validate(), Err(ModelError::SameOriginDestination(RequestId(1))));
        let mut r = req(2, 0.0, 0.0);
        assert!(r.validate().is_err());
        r.max_wait = 1.0;
        r.max_detour = -1.0;
        assert!(r.validate().is_err());
        assert_eq!(req(3, 10.0, 300.0).latest_boarding(), 310.0);
    }

    #[test]
    fn epoch_config_validation() {
        assert!(EpochConfig::new(60.0, 3600.0).is_ok());
        assert!(EpochConfig::new(0.0, 3600.0).is_err());
        assert!(EpochConfig::new(120.0, 60.0).is_err());
    }

    fn line() -> Network {
        Network::grid(1, 5, 10.0, 1.0)
    }

    #[test]
    fn advance_zero_is_noop() {
        let net = line();
        let mut v = VehicleState::new(VehicleId(0), NodeId(0), 4);
        let r = Request {
            id: RequestId(1),
            origin: NodeId(1),
            destination: NodeId(3),
            emergence: 0.0,
            max_wait: 300.0,
            max_detour: 600.0,
        };
        let route = plan_route(&net, v.start(0.0), vec![r.pickup_stop(), r.dropoff_stop(&net)]).unwrap();
        v.set_route(route, 0.0);
        let (after, events) = advance_vehicle(&net, &v, 0.0, 0.0);
        assert!(events.is_empty());
        assert_eq!(after, v);
    }

    #[test]
    fn single_stop_event_time() {
        let net = line();
        let mut v = VehicleState::new(VehicleId(0), NodeId(0), 4);
        v.onboard.insert(RequestId(9));
        let route = plan_route(
            &net,
            v.start(100.0),
            vec![Stop::onboard_dropoff(RequestId(9), NodeId(1), 500.0)],
        )
        .unwrap();
        v.set_route(route, 100.0);
        let (after, events) = advance_vehicle(&net, &v, 60.0, 100.0);
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].time, 110.0);
        assert_eq!(events[0].kind, EventKind::Dropoff);
        assert_eq!(after.node, NodeId(1));
        assert!(after.onboard.is_empty());
        assert_eq!(after.distance, 10.0);
    }

    #[test]
    fn pickup_fixes_dropoff_deadline() {
        let net = line();
        let mut v = VehicleState::new(VehicleId(0), NodeId(0), 4);
        let r = Request {
            id: RequestId(1),
            origin: NodeId(1),
            destination: NodeId(3),
            emergence: 0.0,
            max_wait: 300.0,
            max_detour: 5.0,
        };
        let route = plan_route(&net, v.start(0.0), vec![r.pickup_stop(), r.dropoff_stop(&net)]).unwrap();
        assert_eq!(route.stops[1].deadline, 10.0 + 20.0 + 5.0);
        v.set_route(route, 0.0);
        let ev = v.advance(&net, 15.0);
        assert_eq!(ev.len(), 1);
        assert!(v.onboard.contains(&RequestId(1)));
        assert_eq!(v.route.stops[0].deadline, 35.0);
    }

    #[test]
    fn pickup_waits_for_emergence() {
        let net = line();
        let mut v = VehicleState::new(VehicleId(0), NodeId(0), 4);
        let r = Request {
            id: RequestId(1),
            origin: NodeId(1),
            destination: NodeId(2),
            emergence: 50.0,
            max_wait: 300.0,
            max_detour: 5.0,
        };
        let route = plan_route(&net, v.start(0.0), vec![r.pickup_stop(), r.dropoff_stop(&net)]).unwrap();
        assert_eq!(route.times, vec![50.0, 60.0]);
        v.set_route(route, 0.0);
        assert!(v.advance(&net, 40.0).is_empty());
        let ev = v.advance(&net, 100.0);
        assert_eq!(ev.iter().map(|e| e.time).collect::<Vec<_>>(), vec![50.0, 60.0]);
    }

    #[test]
    fn schedule_rejects_capacity_and_deadlines() {
        let net = line();
        let start = RouteStart { node: NodeId(0), time: 0.0, capacity: 1, load: 1 };
        let r = Request {
            id: RequestId(1),
            origin: NodeId(1),
            destination: NodeId(2),
            emergence: 0.0,
            max_wait: 300.0,
            max_detour: 5.0,
        };
        assert!(schedule(&net, start, &[r.pickup_stop()]).is_none());
        let start = RouteStart { load: 0, ..start };
        assert!(schedule(&net, start, &[r.pickup_stop(), r.dropoff_stop(&net)]).is_some());
        let late = Stop::onboard_dropoff(RequestId(2), NodeId(4), 39.0);
        assert!(schedule(&net, RouteStart { load: 1, ..start }, &[late]).is_none());
    }
}
