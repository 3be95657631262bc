//! One decision epoch as seen by the assignment algorithms: vehicles,
//! batched requests and a trip-cost oracle over request sets.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Mutex;

use crate::ctsp::{oracle, CtspMode, CtspPolicy, CtspQuery, RouteMemory};
use crate::model::{route_cost, Request, RequestId, Route, VehicleId, VehicleState};
use crate::network::Network;

/// Incremental cost of serving a set of epoch requests with a vehicle.
///
/// `requests` is sorted ascending. The empty set costs zero.
pub trait TripOracle: Sync {
    fn trip_cost(&self, vehicle: VehicleId, requests: &[RequestId]) -> Option<f64>;

    /// Whether two requests could share an empty vehicle placed at either
    /// origin.
    fn shareable(&self, _a: RequestId, _b: RequestId) -> bool {
        true
    }

    fn trip_route(&self, _vehicle: VehicleId, _requests: &[RequestId]) -> Option<Route> {
        None
    }
}

/// Explicit cost table; sets not listed are infeasible.
#[derive(Debug, Clone, Default)]
pub struct TableOracle {
    costs: HashMap<(VehicleId, Vec<RequestId>), f64>,
    unshareable: BTreeSet<(RequestId, RequestId)>,
}

impl TableOracle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, vehicle: u32, requests: &[u32], cost: f64) -> &mut Self {
        let mut key: Vec<RequestId> = requests.iter().map(|&r| RequestId(r)).collect();
        key.sort();
        self.costs.insert((VehicleId(vehicle), key), cost);
        self
    }

    pub fn forbid_pair(&mut self, a: u32, b: u32) -> &mut Self {
        let (a, b) = (RequestId(a.min(b)), RequestId(a.max(b)));
        self.unshareable.insert((a, b));
        self
    }
}

impl TripOracle for TableOracle {
    fn trip_cost(&self, vehicle: VehicleId, requests: &[RequestId]) -> Option<f64> {
        if requests.is_empty() {
            return Some(0.0);
        }
        self.costs.get(&(vehicle, requests.to_vec())).copied()
    }

    fn shareable(&self, a: RequestId, b: RequestId) -> bool {
        !self.unshareable.contains(&(a.min(b), a.max(b)))
    }
}

type CacheEntry = Option<(f64, Route)>;

/// Trip oracle backed by the CTSP solver. Costs are relative to each
/// vehicle's base route and cached per request set.
pub struct CtspTripOracle<'a> {
    net: &'a Network,
    now: f64,
    policy: CtspPolicy,
    vehicles: BTreeMap<VehicleId, VehicleState>,
    requests: BTreeMap<RequestId, Request>,
    fallback: BTreeMap<VehicleId, (Vec<RequestId>, Route)>,
    memory: Option<&'a RouteMemory>,
    max_capacity: u32,
    cache: Mutex<HashMap<(VehicleId, Vec<RequestId>), CacheEntry>>,
    pairs: Mutex<HashMap<(RequestId, RequestId), bool>>,
}

impl<'a> CtspTripOracle<'a> {
    pub fn new(
        net: &'a Network,
        now: f64,
        policy: CtspPolicy,
        vehicles: impl IntoIterator<Item = VehicleState>,
        requests: impl IntoIterator<Item = Request>,
    ) -> Self {
        let vehicles: BTreeMap<_, _> = vehicles.into_iter().map(|v| (v.id, v)).collect();
        let max_capacity = vehicles.values().map(|v| v.capacity).max().unwrap_or(0);
        CtspTripOracle {
            net,
            now,
            policy,
            vehicles,
            requests: requests.into_iter().map(|r| (r.id, r)).collect(),
            fallback: BTreeMap::new(),
            memory: None,
            max_capacity,
            cache: Mutex::new(HashMap::new()),
            pairs: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_memory(mut self, memory: &'a RouteMemory) -> Self {
        self.memory = Some(memory);
        self
    }

    /// Route returned for exactly `requests` on `vehicle` when the CTSP
    /// policy finds none, typically the route the vehicle was already
    /// executing.
    pub fn with_fallback(mut self, vehicle: VehicleId, mut requests: Vec<RequestId>, route: Route) -> Self {
        requests.sort();
        self.fallback.insert(vehicle, (requests, route));
        self
    }

    pub fn vehicle(&self, id: VehicleId) -> Option<&VehicleState> {
        self.vehicles.get(&id)
    }

    fn compute(&self, vehicle: VehicleId, requests: &[RequestId]) -> CacheEntry {
        let v = self.vehicles.get(&vehicle)?;
        let reqs: Vec<Request> = requests
            .iter()
            .map(|r| self.requests.get(r).cloned())
            .collect::<Option<_>>()?;
        let q = CtspQuery::new(self.net, v, &reqs, self.now);
        let (route, cost) = oracle(&q, &self.policy, self.memory);
        match route {
            Some(r) => Some((cost, r)),
            None => {
                let (set, route) = self.fallback.get(&vehicle)?;
                if set.as_slice() != requests {
                    return None;
                }
                let base = route_cost(self.net, v, &v.route);
                Some((route_cost(self.net, v, route) - base, route.clone()))
            }
        }
    }

    fn lookup(&self, vehicle: VehicleId, requests: &[RequestId]) -> CacheEntry {
        let key = (vehicle, requests.to_vec());
        if let Some(hit) = self.cache.lock().unwrap().get(&key) {
            return hit.clone();
        }
        let value = self.compute(vehicle, requests);
        self.cache.lock().unwrap().insert(key, value.clone());
        value
    }

    /// Number of distinct (vehicle, set) evaluations so far.
    pub fn evaluations(&self) -> usize {
        self.cache.lock().unwrap().len()
    }

    fn virtual_share(&self, at: &Request, pair: [&Request; 2]) -> bool {
        let mut v = VehicleState::new(VehicleId(u32::MAX), at.origin, self.max_capacity.max(2));
        v.ready_at = self.now;
        let reqs = [pair[0].clone(), pair[1].clone()];
        let q = CtspQuery::new(self.net, &v, &reqs, self.now);
        let policy = CtspPolicy {
            mode: CtspMode::Exact,
            ..self.policy
        };
        oracle(&q, &policy, None).0.is_some()
    }
}

impl TripOracle for CtspTripOracle<'_> {
    fn trip_cost(&self, vehicle: VehicleId, requests: &[RequestId]) -> Option<f64> {
        if requests.is_empty() {
            return self.vehicles.contains_key(&vehicle).then_some(0.0);
        }
        self.lookup(vehicle, requests).map(|(c, _)| c)
    }

    fn trip_route(&self, vehicle: VehicleId, requests: &[RequestId]) -> Option<Route> {
        if requests.is_empty() {
            return self.vehicles.get(&vehicle).map(|v| v.route.clone());
        }
        self.lookup(vehicle, requests).map(|(_, r)| r)
    }

    fn shareable(&self, a: RequestId, b: RequestId) -> bool {
        let key = (a.min(b), a.max(b));
        if let Some(&hit) = self.pairs.lock().unwrap().get(&key) {
            return hit;
        }
        let (Some(ra), Some(rb)) = (self.requests.get(&key.0), self.requests.get(&key.1)) else {
            return false;
        };
        let ok = self.virtual_share(ra, [ra, rb]) || self.virtual_share(rb, [ra, rb]);
        self.pairs.lock().unwrap().insert(key, ok);
        ok
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRequest {
    pub id: RequestId,
    /// Left unassigned in an earlier epoch.
    pub carried: bool,
    /// Assigned earlier but not yet picked up; must be served by some
    /// vehicle in this epoch.
    pub held_by: Option<VehicleId>,
}

impl EpochRequest {
    pub fn fresh(id: u32) -> Self {
        EpochRequest {
            id: RequestId(id),
            carried: false,
            held_by: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochInstance {
    pub now: f64,
    /// Sorted ascending.
    pub vehicles: Vec<VehicleId>,
    /// Sorted ascending by id.
    pub requests: Vec<EpochRequest>,
    /// Per-request penalty for leaving a request unserved.
    pub penalty: f64,
    /// Penalty multiplier for carried requests.
    pub kappa: f64,
    /// Largest trip size enumerated.
    pub max_trip_size: usize,
}

impl EpochInstance {
    pub fn new(vehicles: &[u32], requests: &[u32]) -> Self {
        let mut vehicles: Vec<VehicleId> = vehicles.iter().map(|&v| VehicleId(v)).collect();
        vehicles.sort();
        let mut requests: Vec<EpochRequest> = requests.iter().map(|&r| EpochRequest::fresh(r)).collect();
        requests.sort_by_key(|r| r.id);
        EpochInstance {
            now: 0.0,
            vehicles,
            requests,
            penalty: 1e7,
            kappa: 2.0,
            max_trip_size: 4,
        }
    }

    pub fn request_ids(&self) -> Vec<RequestId> {
        self.requests.iter().map(|r| r.id).collect()
    }

    pub fn get(&self, id: RequestId) -> Option<&EpochRequest> {
        self.requests
            .binary_search_by_key(&id, |r| r.id)
            .ok()
            .map(|i| &self.requests[i])
    }

    pub fn penalty_of(&self, id: RequestId) -> f64 {
        match self.get(id) {
            Some(r) if r.carried => self.penalty * self.kappa,
            _ => self.penalty,
        }
    }

    pub fn held(&self, vehicle: VehicleId) -> Vec<RequestId> {
        self.requests
            .iter()
            .filter(|r| r.held_by == Some(vehicle))
            .map(|r| r.id)
            .collect()
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AssignError {
    #[error("request {0} assigned more than once")]
    Duplicate(RequestId),
    #[error("request {0} is not part of the epoch")]
    UnknownRequest(RequestId),
    #[error("vehicle {0} is not part of the epoch")]
    UnknownVehicle(VehicleId),
    #[error("trip of vehicle {0} is infeasible")]
    Infeasible(VehicleId),
    #[error("request {0} was already promised a ride but is unserved")]
    HeldUnserved(RequestId),
}

/// Vehicle → added epoch requests; unserved requests; objective value.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AssignmentSolution {
    pub trips: BTreeMap<VehicleId, Vec<RequestId>>,
    pub unserved: Vec<RequestId>,
    pub objective: f64,
}

impl AssignmentSolution {
    pub fn served_count(&self) -> usize {
        self.trips.values().map(|t| t.len()).sum()
    }

    pub fn vehicle_of(&self, r: RequestId) -> Option<VehicleId> {
        self.trips
            .iter()
            .find(|(_, t)| t.contains(&r))
            .map(|(&v, _)| v)
    }
}

/// Checks the trips against the instance and recomputes the objective.
pub fn evaluate(
    instance: &EpochInstance,
    oracle: &dyn TripOracle,
    trips: &BTreeMap<VehicleId, Vec<RequestId>>,
) -> Result<AssignmentSolution, AssignError> {
    let mut seen = BTreeSet::new();
    let mut out = BTreeMap::new();
    let mut objective = 0.0;
    for (&v, set) in trips {
        if instance.vehicles.binary_search(&v).is_err() {
            return Err(AssignError::UnknownVehicle(v));
        }
        if set.is_empty() {
            continue;
        }
        let mut set = set.clone();
        set.sort();
        for &r in &set {
            if instance.get(r).is_none() {
                return Err(AssignError::UnknownRequest(r));
            }
            if !seen.insert(r) {
                return Err(AssignError::Duplicate(r));
            }
        }
        objective += oracle
            .trip_cost(v, &set)
            .ok_or(AssignError::Infeasible(v))?;
        out.insert(v, set);
    }
    let mut unserved = Vec::new();
    for r in &instance.requests {
        if !seen.contains(&r.id) {
            if r.held_by.is_some() {
                return Err(AssignError::HeldUnserved(r.id));
            }
            objective += instance.penalty_of(r.id);
            unserved.push(r.id);
        }
    }
    Ok(AssignmentSolution {
        trips: out,
        unserved,
        objective,
    })
}
