use super::*;
use crate::epoch::TableOracle;

fn r(i: u32) -> RequestId {
    RequestId(i)
}

fn v(i: u32) -> VehicleId {
    VehicleId(i)
}

fn bnb() -> BnbOptions {
    BnbOptions::default()
}

fn assigned(trace: &RoundTrace) -> Vec<(u32, u32)> {
    trace
        .accepted
        .iter()
        .filter_map(|m| match *m {
            Move::Assign { request, vehicle, .. } => Some((request.0, vehicle.0)),
            Move::Swap { .. } => None,
        })
        .collect()
}

fn swapped(trace: &RoundTrace) -> Vec<(u32, u32, u32)> {
    trace
        .accepted
        .iter()
        .filter_map(|m| match *m {
            Move::Swap { request, from, to, .. } => Some((request.0, from.0, to.0)),
            Move::Assign { .. } => None,
        })
        .collect()
}

/// Three vehicles, five requests; requests 2 and 3 both reach vehicle 1.
fn multi_round_table() -> TableOracle {
    let mut t = TableOracle::new();
    t.set(1, &[1], 5.0)
        .set(1, &[2], 1.0)
        .set(1, &[3], 2.0)
        .set(2, &[3], 6.0)
        .set(3, &[4], 1.0)
        .set(3, &[5], 2.0)
        .set(1, &[1, 2], 4.0)
        .set(1, &[2, 3], 3.0)
        .set(3, &[4, 5], 2.0)
        .set(1, &[1, 2, 3], 6.0);
    t
}

/// Three vehicles, four requests; swaps become profitable after round 1.
fn swap_table() -> TableOracle {
    let mut t = TableOracle::new();
    t.set(1, &[1], 5.0)
        .set(1, &[2], 2.0)
        .set(2, &[3], 3.0)
        .set(3, &[4], 3.0)
        .set(1, &[1, 2], 6.0)
        .set(2, &[2, 3], 4.0)
        .set(3, &[3, 4], 4.0)
        .set(1, &[2, 4], 4.5)
        .set(2, &[2], 0.5)
        .set(1, &[1, 2, 3], 6.8);
    t
}

#[test]
fn multi_round_figure() {
    let t = multi_round_table();
    let inst = EpochInstance::new(&[1, 2, 3], &[1, 2, 3, 4, 5]);
    let (state, trace) = run_la(LaVariant::LaMr, &inst, &t, &bnb());
    assert_eq!(trace.rounds.len(), 3);
    assert_eq!(assigned(&trace.rounds[0]), vec![(2, 1), (4, 3)]);
    assert_eq!(assigned(&trace.rounds[1]), vec![(1, 1), (5, 3)]);
    assert_eq!(assigned(&trace.rounds[2]), vec![(3, 1)]);
    assert_eq!(state.sets[&v(1)], vec![r(1), r(2), r(3)]);
    assert_eq!(state.sets[&v(3)], vec![r(4), r(5)]);
    assert!(state.sets[&v(2)].is_empty());
    let sol = state.solution();
    assert!(sol.unserved.is_empty());
    assert_eq!(sol.objective, 8.0);
}

#[test]
fn single_round_la_on_figure() {
    let t = multi_round_table();
    let inst = EpochInstance::new(&[1, 2, 3], &[1, 2, 3, 4, 5]);
    let sol = la_assign(&inst, &t, &bnb());
    assert_eq!(sol.trips[&v(1)], vec![r(2)]);
    assert_eq!(sol.trips[&v(2)], vec![r(3)]);
    assert_eq!(sol.trips[&v(3)], vec![r(4)]);
    assert_eq!(sol.unserved, vec![r(1), r(5)]);
}

#[test]
fn naive_swap_figure() {
    let t = swap_table();
    let inst = EpochInstance::new(&[1, 2, 3], &[1, 2, 3, 4]);
    let (state, trace) = run_la(LaVariant::LaMrNs, &inst, &t, &bnb());
    assert_eq!(trace.rounds.len(), 3);
    assert_eq!(assigned(&trace.rounds[0]), vec![(2, 1), (3, 2), (4, 3)]);
    assert_eq!(assigned(&trace.rounds[1]), vec![(1, 1)]);
    assert_eq!(swapped(&trace.rounds[1]), vec![(3, 2, 3)]);
    assert_eq!(swapped(&trace.rounds[2]), vec![(2, 1, 2)]);
    assert_eq!(state.sets[&v(1)], vec![r(1)]);
    assert_eq!(state.sets[&v(2)], vec![r(2)]);
    assert_eq!(state.sets[&v(3)], vec![r(3), r(4)]);
    let mut prev = trace.initial_objective;
    for round in &trace.rounds {
        assert!(round.objective < prev);
        assert!((round.objective - (prev + round.predicted_delta)).abs() < 1e-6);
        prev = round.objective;
    }
}

#[test]
fn proper_swap_figure_matches_naive() {
    let t = swap_table();
    let inst = EpochInstance::new(&[1, 2, 3], &[1, 2, 3, 4]);
    let ns = la_mr_ns_assign(&inst, &t, &bnb());
    let (state, trace) = run_la(LaVariant::LaMrPs, &inst, &t, &bnb());
    assert_eq!(state.solution(), ns);
    assert_eq!(swapped(trace.rounds.last().unwrap()), vec![(2, 1, 2)]);
    let mut prev = trace.initial_objective;
    for round in &trace.rounds {
        assert!(round.objective < prev);
        prev = round.objective;
    }
}

#[test]
fn two_travellers_share_near_vehicle() {
    let mut t = TableOracle::new();
    t.set(1, &[1], 1.0)
        .set(1, &[2], 1.0)
        .set(1, &[1, 2], 1.5)
        .set(2, &[1], 11.0)
        .set(2, &[2], 10.0);
    let inst = EpochInstance::new(&[1, 2], &[1, 2]);
    let la = la_assign(&inst, &t, &bnb());
    assert_eq!(la.served_count(), 2);
    assert_eq!(la.trips.len(), 2);
    let mr = la_mr_assign(&inst, &t, &bnb());
    assert_eq!(mr.trips[&v(1)], vec![r(1), r(2)]);
    assert!(mr.objective < la.objective);
}

#[test]
fn independent_requests_give_same_result() {
    let mut t = TableOracle::new();
    t.set(1, &[1], 2.0).set(2, &[2], 3.0);
    let inst = EpochInstance::new(&[1, 2], &[1, 2]);
    assert_eq!(la_assign(&inst, &t, &bnb()), la_mr_assign(&inst, &t, &bnb()));
    assert_eq!(la_mr_assign(&inst, &t, &bnb()), la_mr_ns_assign(&inst, &t, &bnb()));
}

#[test]
fn carried_request_has_priority() {
    let mut t = TableOracle::new();
    t.set(1, &[1], 4.0).set(1, &[2], 4.0);
    let mut inst = EpochInstance::new(&[1], &[1, 2]);
    inst.requests[1].carried = true;
    let sol = la_assign(&inst, &t, &bnb());
    assert_eq!(sol.trips[&v(1)], vec![r(2)]);
}

#[test]
fn no_edges_all_unserved() {
    let inst = EpochInstance::new(&[1], &[1, 2]);
    let sol = la_assign(&inst, &TableOracle::new(), &bnb());
    assert_eq!(sol.unserved, vec![r(1), r(2)]);
}

#[test]
fn proper_swap_picks_largest_reduction() {
    let mut t = TableOracle::new();
    // moving 1 to v2 saves 4, moving 2 to v1 saves 9
    t.set(1, &[1], 10.0)
        .set(2, &[1], 6.0)
        .set(2, &[2], 12.0)
        .set(1, &[2], 3.0)
        .set(1, &[1, 2], 13.0)
        .set(2, &[1, 2], 18.0);
    let inst = EpochInstance::new(&[1, 2], &[1, 2]);
    let mut state = LaState::new(&inst, &t);
    assert!(state.proper_swap(v(1), v(2)).is_none());
    state.sets.insert(v(1), vec![r(1)]);
    state.sets.insert(v(2), vec![r(2)]);
    state.unassigned.clear();
    let m = state.proper_swap(v(1), v(2)).unwrap();
    assert_eq!(m.request(), r(2));
    match m {
        Move::Swap { reduction, from, to, .. } => {
            assert_eq!((from, to), (v(2), v(1)));
            assert!((reduction - 9.0).abs() < 1e-12);
        }
        _ => unreachable!(),
    }
}

#[test]
fn vehicle_sampling_rejects_dependent_swaps() {
    let a = Move::Swap {
        request: r(1),
        from: v(1),
        to: v(2),
        reduction: 3.0,
    };
    let b = Move::Swap {
        request: r(2),
        from: v(2),
        to: v(3),
        reduction: 3.0,
    };
    let c = Move::Assign {
        request: r(3),
        vehicle: v(4),
        cost: 1.0,
    };
    let kept = sample_independent(&[b, c, a], &[], SampleMode::Vehicles);
    assert_eq!(kept, vec![a, c]);
}

#[test]
fn zero_reduction_swap_excluded() {
    let mut t = TableOracle::new();
    t.set(1, &[1], 5.0).set(2, &[1], 5.0);
    let inst = EpochInstance::new(&[1, 2], &[1]);
    let mut state = LaState::new(&inst, &t);
    state.apply(&Move::Assign {
        request: r(1),
        vehicle: v(1),
        cost: 5.0,
    });
    assert!(state.naive_swaps().is_empty());
}
