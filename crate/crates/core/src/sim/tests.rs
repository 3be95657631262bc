use super::*;

fn line() -> Network {
    // 10 s per block
    Network::grid(1, 10, 100.0, 10.0)
}

fn req(id: u32, o: u32, d: u32, t: f64) -> Request {
    Request {
        id: RequestId(id),
        origin: NodeId(o),
        destination: NodeId(d),
        emergence: t,
        max_wait: 300.0,
        max_detour: 600.0,
    }
}

fn cfg(algo: Algorithm, horizon: f64) -> SimConfig {
    SimConfig {
        algo,
        horizon,
        ..SimConfig::default()
    }
}

fn fleet(nodes: &[u32]) -> Vec<VehicleState> {
    nodes
        .iter()
        .enumerate()
        .map(|(i, &n)| VehicleState::new(VehicleId(i as u32 + 1), NodeId(n), 4))
        .collect()
}

#[test]
fn empty_demand() {
    let net = line();
    let out = run_simulation(&net, &cfg(Algorithm::La, 600.0), &[], &fleet(&[0]));
    assert!(out.metrics.zero_demand);
    assert_eq!(out.metrics.service_rate, 1.0);
    assert_eq!(out.metrics.vmt_m, 0.0);
    assert_eq!(out.epochs.len(), 10);
    assert!(out.events.is_empty());
}

#[test]
fn single_request_is_served_in_time() {
    let net = line();
    let r = req(1, 3, 7, 10.0);
    let out = run_simulation(&net, &cfg(Algorithm::La, 600.0), &[r.clone()], &fleet(&[0]));
    assert_eq!(out.metrics.served, 1);
    assert_eq!(out.metrics.service_rate, 1.0);
    assert_eq!(out.metrics.shared_rate, 0.0);
    let pickup = out.events.iter().find(|e| e.kind == EventType::Pickup).unwrap();
    // decided at 60, three blocks to the origin
    assert_eq!(pickup.time, 90.0);
    assert!(pickup.time <= r.latest_boarding());
    assert_eq!(out.metrics.vmt_m, 700.0);
    assert!(audit(&net, &[r], &out.events).is_empty());
}

#[test]
fn overlapping_rides_are_shared() {
    let net = line();
    let rs = [req(1, 0, 9, 10.0), req(2, 1, 8, 20.0)];
    let out = run_simulation(&net, &cfg(Algorithm::LaMr, 600.0), &rs, &fleet(&[0]));
    assert_eq!(out.metrics.served, 2);
    assert_eq!(out.metrics.shared_rate, 1.0);
    assert!(audit(&net, &rs, &out.events).is_empty());
}

#[test]
fn unserved_request_is_carried() {
    let net = line();
    // one vehicle, LA serves one request per epoch
    let rs = [req(1, 0, 9, 10.0), req(2, 1, 8, 20.0)];
    let mut sim = Simulator::new(&net, cfg(Algorithm::La, 600.0), &rs, fleet(&[0]));
    sim.step_epoch(0, 60.0, 120.0);
    assert_eq!(sim.epochs[0].assigned, 1);
    assert_eq!(sim.epochs[0].unserved, 1);
    sim.step_epoch(1, 120.0, 180.0);
    assert_eq!(sim.epochs[1].carried, 1);
    assert_eq!(sim.epochs[1].new_requests, 0);
}

#[test]
fn expiry_after_latest_boarding() {
    let net = line();
    let mut r = req(1, 9, 0, 10.0);
    r.max_wait = 60.0;
    // the vehicle is 90 s away: unservable, expires at 70
    let out = run_simulation(&net, &cfg(Algorithm::La, 300.0), &[r.clone()], &fleet(&[0]));
    assert_eq!(out.metrics.expired, 1);
    let exp = out.events.iter().find(|e| e.kind == EventType::Expiry).unwrap();
    assert_eq!(exp.time, 70.0);
    assert!(out.events.iter().all(|e| e.kind != EventType::Pickup));
    // rebalancing sent the idle vehicle toward the origin
    assert!(out.events.iter().any(|e| e.kind == EventType::Relocation));
}

#[test]
fn every_algorithm_audits_clean_and_is_deterministic() {
    let net = Network::grid(4, 4, 200.0, 10.0);
    let spec = crate::demand::DemandSpec {
        rate: 3,
        horizon: 600.0,
        seed: 5,
        max_wait: 300.0,
        max_detour: 600.0,
    };
    let rs = crate::demand::generate(&spec, &net);
    let vs = fleet(&[0, 5, 10, 15]);
    for algo in Algorithm::ALL {
        let c = SimConfig {
            rtv_timeout: 1e6,
            ..cfg(algo, 600.0)
        };
        let a = run_simulation(&net, &c, &rs, &vs);
        let issues = audit(&net, &rs, &a.events);
        assert!(issues.is_empty(), "{algo}: {issues:?}");
        let m = &a.metrics;
        assert_eq!(m.served + m.expired + m.pending, m.requests, "{algo}");
        assert!(m.service_rate > 0.0 && m.service_rate <= 1.0);
        let assigned: usize = a.epochs.iter().map(|e| e.assigned).sum();
        assert!(assigned <= m.requests);
        let b = run_simulation(&net, &c, &rs, &vs);
        assert_eq!(events_csv(&a.events), events_csv(&b.events), "{algo}");
    }
}

#[test]
fn future_requests_wait_for_emergence() {
    let net = line();
    let r = req(1, 2, 6, 150.0);
    let c = SimConfig {
        future_window: 480.0,
        ..cfg(Algorithm::La, 600.0)
    };
    let out = run_simulation(&net, &c, &[r.clone()], &fleet(&[0]));
    let assign = out.events.iter().find(|e| e.kind == EventType::Assignment).unwrap();
    assert_eq!(assign.time, 60.0);
    let pickup = out.events.iter().find(|e| e.kind == EventType::Pickup).unwrap();
    assert_eq!(pickup.time, 150.0);
    assert!(audit(&net, &[r], &out.events).is_empty());
}

#[test]
fn self_comparison_is_one_hundred_percent() {
    let net = line();
    let rs = [req(1, 0, 9, 10.0), req(2, 1, 8, 20.0)];
    let rows = compare_algorithms(&net, &cfg(Algorithm::La, 600.0), &rs, &fleet(&[0]), &[Algorithm::La]);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].vmt_pct, 100.0);
    assert_eq!(comparison_csv(&rows).lines().count(), 2);
}

#[test]
fn shared_overlap_rule() {
    let v = VehicleId(1);
    assert_eq!(shared_count(&[(v, 0.0, 10.0), (v, 10.0, 20.0)]), 0);
    assert_eq!(shared_count(&[(v, 0.0, 10.0), (v, 5.0, 20.0)]), 2);
    assert_eq!(shared_count(&[(v, 0.0, 10.0), (VehicleId(2), 5.0, 20.0)]), 0);
}
