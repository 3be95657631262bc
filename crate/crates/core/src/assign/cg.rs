//! Column generation over the epoch trip ILP with a dual-guided sized-column
//! pricing heuristic.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::time::{Duration, Instant};

use crate::epoch::{AssignmentSolution, EpochInstance, TripOracle};
use crate::model::{RequestId, VehicleId};
use crate::optim::{bnb_solve_with, simplex_solve_with, BnbOptions, LpStatus};

use super::rtv::{ensure_held_trips, solution_from_trips, trip_ilp, Trip};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    pub time_limit: Option<Duration>,
    /// Subsets evaluated per vehicle per pricing call.
    pub subset_cap: usize,
    pub bnb: BnbOptions,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions {
            time_limit: None,
            subset_cap: 1000,
            bnb: BnbOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Duals {
    pub pi: BTreeMap<RequestId, f64>,
    pub sigma: BTreeMap<VehicleId, f64>,
}

pub fn reduced_cost(cost: f64, vehicle: VehicleId, requests: &[RequestId], duals: &Duals) -> f64 {
    let pi: f64 = requests
        .iter()
        .map(|r| duals.pi.get(r).copied().unwrap_or(0.0))
        .sum();
    cost - pi - duals.sigma.get(&vehicle).copied().unwrap_or(0.0)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CgTrace {
    /// RMP relaxation objective per iteration.
    pub lp_objectives: Vec<f64>,
    /// Columns added, with their reduced cost at the time of addition.
    pub added: Vec<(Trip, f64)>,
    /// True when pricing found no column (as opposed to the time limit).
    pub converged: bool,
}

/// Lexicographic `k`-subsets of `items`, at most `cap` of them.
fn subsets(items: &[RequestId], k: usize, cap: usize) -> Vec<Vec<RequestId>> {
    let n = items.len();
    let mut out = Vec::new();
    if k == 0 || k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        if out.len() >= cap {
            break;
        }
        let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
            break;
        };
        idx[i] += 1;
        for t in i + 1..k {
            idx[t] = idx[t - 1] + 1;
        }
    }
    out
}

/// Pricing for size `j`: vehicles by decreasing σ claim their best
/// negative-reduced-cost subset from the shared request pool.
pub fn generate_sized_columns(
    inst: &EpochInstance,
    j: usize,
    duals: &Duals,
    oracle: &dyn TripOracle,
    reachable: &BTreeMap<VehicleId, Vec<RequestId>>,
    existing: &HashSet<(VehicleId, Vec<RequestId>)>,
    subset_cap: usize,
) -> Vec<(Trip, f64)> {
    let mut order = inst.vehicles.clone();
    order.sort_by(|a, b| {
        let sa = duals.sigma.get(a).copied().unwrap_or(0.0);
        let sb = duals.sigma.get(b).copied().unwrap_or(0.0);
        sb.total_cmp(&sa).then(a.cmp(b))
    });
    let mut pool: BTreeSet<RequestId> = inst.request_ids().into_iter().collect();
    let mut out = Vec::new();
    for v in order {
        let cands: Vec<RequestId> = reachable
            .get(&v)
            .map(|rs| rs.iter().copied().filter(|r| pool.contains(r)).collect())
            .unwrap_or_default();
        let mut best: Option<(Vec<RequestId>, f64, f64)> = None;
        for s in subsets(&cands, j, subset_cap) {
            if existing.contains(&(v, s.clone())) {
                continue;
            }
            let Some(c) = oracle.trip_cost(v, &s) else { continue };
            let rc = reduced_cost(c, v, &s, duals);
            if best.as_ref().map_or(true, |b| rc < b.2 - 1e-12) {
                best = Some((s, c, rc));
            }
        }
        if let Some((s, c, rc)) = best {
            if rc < -1e-9 {
                for r in &s {
                    pool.remove(r);
                }
                out.push((
                    Trip {
                        vehicle: v,
                        requests: s,
                        cost: c,
                    },
                    rc,
                ));
            }
        }
    }
    out
}

pub fn cg_assign(inst: &EpochInstance, oracle: &dyn TripOracle, opts: &CgOptions) -> AssignmentSolution {
    cg_assign_traced(inst, oracle, opts).0
}

pub fn cg_assign_traced(
    inst: &EpochInstance,
    oracle: &dyn TripOracle,
    opts: &CgOptions,
) -> (AssignmentSolution, CgTrace) {
    let started = Instant::now();
    let out_of_time = || opts.time_limit.map_or(false, |l| started.elapsed() >= l);
    let ids = inst.request_ids();
    let mut reachable: BTreeMap<VehicleId, Vec<RequestId>> = BTreeMap::new();
    let mut trips: Vec<Trip> = Vec::new();
    for &v in &inst.vehicles {
        let mut rs = Vec::new();
        for &r in &ids {
            if let Some(c) = oracle.trip_cost(v, &[r]) {
                rs.push(r);
                trips.push(Trip {
                    vehicle: v,
                    requests: vec![r],
                    cost: c,
                });
            }
        }
        reachable.insert(v, rs);
    }
    let relaxed = ensure_held_trips(inst, oracle, &mut trips);
    let mut existing: HashSet<(VehicleId, Vec<RequestId>)> =
        trips.iter().map(|t| (t.vehicle, t.requests.clone())).collect();
    let mut trace = CgTrace::default();
    let n_veh = inst.vehicles.len();

    loop {
        if out_of_time() {
            break;
        }
        let lp = trip_ilp(inst, &trips, &relaxed);
        let sol = simplex_solve_with(&lp, &opts.bnb.lp);
        if sol.status != LpStatus::Optimal {
            break;
        }
        trace.lp_objectives.push(sol.objective);
        let duals = Duals {
            sigma: inst
                .vehicles
                .iter()
                .enumerate()
                .map(|(i, &v)| (v, sol.duals[i]))
                .collect(),
            pi: inst
                .requests
                .iter()
                .enumerate()
                .map(|(i, r)| (r.id, sol.duals[n_veh + i]))
                .collect(),
        };
        let mut added = Vec::new();
        for j in 1..=inst.max_trip_size {
            if out_of_time() {
                break;
            }
            added = generate_sized_columns(inst, j, &duals, oracle, &reachable, &existing, opts.subset_cap);
            if !added.is_empty() {
                break;
            }
        }
        if added.is_empty() {
            trace.converged = !out_of_time();
            break;
        }
        for (t, rc) in added {
            existing.insert((t.vehicle, t.requests.clone()));
            trips.push(t.clone());
            trace.added.push((t, rc));
        }
    }
    let lp = trip_ilp(inst, &trips, &relaxed);
    let ilp = bnb_solve_with(&lp, &opts.bnb);
    (solution_from_trips(inst, oracle, &trips, &ilp.ones()), trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epoch::TableOracle;

    #[test]
    fn subset_enumeration() {
        let items: Vec<RequestId> = (1..=4).map(RequestId).collect();
        assert_eq!(subsets(&items, 2, 100).len(), 6);
        assert_eq!(subsets(&items, 4, 100).len(), 1);
        assert_eq!(subsets(&items, 2, 3).len(), 3);
        assert_eq!(subsets(&items, 1, 100).len(), 4);
        assert!(subsets(&items, 5, 100).is_empty());
    }

    #[test]
    fn reduced_cost_arithmetic() {
        let zero = Duals::default();
        assert_eq!(reduced_cost(5.0, VehicleId(1), &[RequestId(1)], &zero), 5.0);
        let d = Duals {
            pi: BTreeMap::from([(RequestId(1), 4.0), (RequestId(2), 3.0)]),
            sigma: BTreeMap::from([(VehicleId(1), -1.0)]),
        };
        assert_eq!(reduced_cost(5.0, VehicleId(1), &[RequestId(1), RequestId(2)], &d), -1.0);
    }

    #[test]
    fn pair_column_generated() {
        let mut t = TableOracle::new();
        t.set(1, &[1], 5.0).set(1, &[2], 5.0).set(1, &[1, 2], 7.0);
        let inst = EpochInstance::new(&[1], &[1, 2]);
        let (sol, trace) = cg_assign_traced(&inst, &t, &CgOptions::default());
        assert_eq!(sol.trips[&VehicleId(1)], vec![RequestId(1), RequestId(2)]);
        assert!(trace.converged);
        assert!(trace.added.iter().all(|(_, rc)| *rc < 0.0));
        for w in trace.lp_objectives.windows(2) {
            assert!(w[1] <= w[0] + 1e-6);
        }
    }

    #[test]
    fn singletons_optimal_and_zero_budget() {
        let mut t = TableOracle::new();
        t.set(1, &[1], 1.0).set(2, &[2], 1.0).set(1, &[1, 2], 10.0);
        let inst = EpochInstance::new(&[1, 2], &[1, 2]);
        let (sol, trace) = cg_assign_traced(&inst, &t, &CgOptions::default());
        assert!(trace.added.is_empty());
        assert_eq!(trace.lp_objectives.len(), 1);
        assert_eq!(sol.objective, 2.0);

        let mut t = TableOracle::new();
        t.set(1, &[1], 5.0).set(1, &[2], 5.0).set(1, &[1, 2], 7.0);
        let inst = EpochInstance::new(&[1], &[1, 2]);
        let opts = CgOptions {
            time_limit: Some(Duration::ZERO),
            ..CgOptions::default()
        };
        let (sol, trace) = cg_assign_traced(&inst, &t, &opts);
        assert!(trace.lp_objectives.is_empty());
        assert_eq!(sol.served_count(), 1);
    }

    #[test]
    fn higher_sigma_claims_first() {
        let mut t = TableOracle::new();
        t.set(1, &[1], 3.0).set(2, &[1], 3.0);
        let inst = EpochInstance::new(&[1, 2], &[1]);
        let duals = Duals {
            pi: BTreeMap::from([(RequestId(1), 10.0)]),
            sigma: BTreeMap::from([(VehicleId(1), -2.0), (VehicleId(2), 0.0)]),
        };
        let reach = BTreeMap::from([
            (VehicleId(1), vec![RequestId(1)]),
            (VehicleId(2), vec![RequestId(1)]),
        ]);
        let cols = generate_sized_columns(&inst, 1, &duals, &t, &reach, &HashSet::new(), 10);
        assert_eq!(cols.len(), 1);
        assert_eq!(cols[0].0.vehicle, VehicleId(2));
    }
}
