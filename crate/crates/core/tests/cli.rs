use std::fs;
use std::path::{Path, PathBuf};

use ridepool::cli::run;

fn town() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/town")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_writes_outputs_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let code = run([
        "ridepool", "simulate", "--data", s(&town()), "--algo", "la", "--horizon", "600", "--out", s(&out),
    ]);
    assert_eq!(code, 0);
    for f in ["metrics.csv", "epochs.csv", "events.csv", "manifest.txt"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("algo = la\n"));
    assert!(manifest.contains("horizon = 600\n"));
    assert_eq!(manifest.matches("sha256=").count(), 4);
    let epochs = fs::read_to_string(out.join("epochs.csv")).unwrap();
    assert_eq!(epochs.lines().count(), 11);
}

#[test]
fn set_overrides_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.txt");
    fs::write(&cfg, "algo = rtv\nhorizon = 300\n").unwrap();
    let out = dir.path().join("o");
    // --set wins over the file
    let code = run([
        "ridepool", "simulate", "--data", s(&town()), "--config", s(&cfg), "--set", "algo=la-mr", "--out", s(&out),
    ]);
    assert_eq!(code, 0);
    let m = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(m.contains("algo = la-mr\n") && m.contains("horizon = 300\n"));
}

#[test]
fn validation_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = s(dir.path());
    assert_eq!(run(["ridepool", "validate", "--data", "/definitely/missing"]), 2);
    assert_eq!(run(["ridepool", "simulate", "--data", s(&town()), "--set", "nope=1", "--out", out]), 2);
    assert_eq!(run(["ridepool", "simulate", "--data", s(&town()), "--algo", "greedy", "--out", out]), 2);
    assert_eq!(run(["ridepool", "simulate", "--data", s(&town()), "--set", "epoch.interval=-5", "--out", out]), 2);
    assert_eq!(run(["ridepool", "frobnicate"]), 2);

    let bad = dir.path().join("bad");
    fs::create_dir(&bad).unwrap();
    for f in ["nodes.csv", "edges.csv", "vehicles.csv"] {
        fs::copy(town().join(f), bad.join(f)).unwrap();
    }
    fs::write(bad.join("requests.csv"), "request_id,origin_node,dest_node,emergence_time_s\n1,0,99,5\n").unwrap();
    assert_eq!(run(["ridepool", "validate", "--data", s(&bad)]), 2);
    assert_eq!(run(["ridepool", "validate", "--data", s(&town())]), 0);
}

#[test]
fn gen_demand_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        let code = run([
            "ridepool", "gen-demand", "--data", s(&town()), "--rate", "5", "--horizon", "300", "--seed", "3", "--out", s(p),
        ]);
        assert_eq!(code, 0);
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert_eq!(text.lines().count(), 26);
}

#[test]
fn compare_and_analyze_lag() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cmp");
    let code = run([
        "ridepool", "compare", "--data", s(&town()), "--horizon", "900", "--algos", "la,la-mr,la-mr-ce", "--out", s(&out),
    ]);
    assert_eq!(code, 0);
    let table = fs::read_to_string(out.join("comparison.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);

    let sim = dir.path().join("sim");
    assert_eq!(run(["ridepool", "simulate", "--data", s(&town()), "--out", s(&sim)]), 0);
    let prefix = dir.path().join("lag/p");
    let code = run([
        "ridepool", "analyze-lag", "--epochs", s(&sim.join("epochs.csv")), "--max-lag", "3", "--out-prefix", s(&prefix),
    ]);
    assert_eq!(code, 0);
    let slopes = fs::read_to_string(dir.path().join("lag/p_slopes.csv")).unwrap();
    assert_eq!(slopes.lines().count(), 4);
    for k in 1..=3 {
        assert!(dir.path().join(format!("lag/p_lag{k}.svg")).is_file());
    }
    // more lags than epochs
    let code = run([
        "ridepool", "analyze-lag", "--epochs", s(&sim.join("epochs.csv")), "--max-lag", "500", "--out-prefix", s(&prefix),
    ]);
    assert_eq!(code, 2);
}
