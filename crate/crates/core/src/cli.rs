//! Command-line front end. `run` returns the process exit code: 0 on
//! success, 2 on invalid input, 1 on runtime failure.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::analysis::{lag_svg, slope_curve, slopes_csv, slopes_svg};
use crate::assign::Algorithm;
use crate::config::{ConfigError, SimConfig};
use crate::demand::{generate, DemandSpec};
use crate::io::{read_network, read_requests, read_vehicles, write_requests, write_text, DataError};
use crate::model::{Request, VehicleState};
use crate::network::Network;
use crate::sim::{comparison_csv, compare_algorithms, epochs_csv, events_csv, metrics_row, run_simulation, METRICS_HEADER};

const CONFIG_HELP: &str = "\
Config keys (file lines `key = value`, or --set key=value):
  epoch.interval         batching interval in seconds (60)
  horizon                simulated seconds (3600)
  vehicle.capacity       default seats per vehicle (4)
  qos.max_wait_s         default maximum wait (300)
  qos.max_detour_s       default maximum detour (600)
  algo                   la | la-mr | la-mr-ns | la-mr-ps | la-mr-ce | rtv | fast-rtv | cg
  ctsp.mode              exact | insertion | oof | lrp (oof)
  ctsp.enumerate_limit   exact search threshold (12)
  ctsp.lrp_eta           LRP re-plan budget in stops (12)
  ctsp.follower_pruning  true | false (true)
  future.window_s        look-ahead on future requests in seconds (0)
  seed                   random seed (0)
  rebalance.enabled      true | false (true)
  solver.penalty_M       unserved request penalty (1e7)
  solver.node_limit      branch-and-bound node limit or none (none)
  solver.tolerance       integrality tolerance (1e-6)
  la.carryover_kappa     penalty multiplier for carried requests (2)
  rtv.timeout_s          fast-rtv enumeration budget (10)
  rtv.reassign           true | false | default (default)
  cg.time_limit_s        column generation budget or none (none)
  cg.subset_cap          subsets priced per vehicle per call (1000)
  ce.U                   null-partition value or none for solver.penalty_M (none)
  ce.labels_per_node     cycle search labels kept per node (1)
  threads                worker threads for oracle calls (1)
The config file defaults to $RIDEPOOL_CONFIG when --config is absent.";

#[derive(Parser, Debug)]
#[command(name = "ridepool", version, about = "Ride-pool assignment simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one simulation and write metrics, epochs, events and a manifest.
    #[command(after_help = CONFIG_HELP)]
    Simulate(SimArgs),
    /// Run several algorithms on identical inputs.
    #[command(after_help = CONFIG_HELP)]
    Compare {
        #[command(flatten)]
        sim: SimArgs,
        /// Comma-separated algorithm list.
        #[arg(long, value_delimiter = ',', default_value = "la,la-mr-ce")]
        algos: Vec<String>,
    },
    /// Generate uniform synthetic requests over a network.
    GenDemand {
        #[command(flatten)]
        net: NetArgs,
        /// Requests per minute.
        #[arg(long)]
        rate: u32,
        /// Seconds.
        #[arg(long)]
        horizon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 300.0)]
        max_wait: f64,
        #[arg(long, default_value_t = 600.0)]
        max_detour: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Lag regression of per-epoch assigned counts.
    AnalyzeLag {
        /// epochs.csv written by `simulate`.
        #[arg(long)]
        epochs: PathBuf,
        #[arg(long)]
        max_lag: usize,
        /// Writes `<prefix>_slopes.csv`, `<prefix>_slopes.svg` and `<prefix>_lag<k>.svg`.
        #[arg(long)]
        out_prefix: PathBuf,
    },
    /// Check config and input files without simulating.
    #[command(after_help = CONFIG_HELP)]
    Validate(SimArgs),
}

#[derive(Args, Debug, Clone)]
pub struct NetArgs {
    /// Directory holding nodes.csv, edges.csv, requests.csv and vehicles.csv.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub nodes: Option<PathBuf>,
    #[arg(long)]
    pub edges: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct SimArgs {
    #[command(flatten)]
    pub net: NetArgs,
    #[arg(long)]
    pub requests: Option<PathBuf>,
    #[arg(long)]
    pub vehicles: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Config override `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub algo: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = "run")]
    pub out: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Runtime(_) => 1,
            _ => 2,
        }
    }
}

fn pick(explicit: &Option<PathBuf>, data: &Option<PathBuf>, name: &str) -> Result<PathBuf, CliError> {
    match (explicit, data) {
        (Some(p), _) => Ok(p.clone()),
        (None, Some(d)) => Ok(d.join(name)),
        (None, None) => Err(CliError::Invalid(format!("no path for {name}: pass --data or the file flag"))),
    }
}

fn existing(p: PathBuf) -> Result<PathBuf, CliError> {
    if p.is_file() {
        Ok(p)
    } else {
        Err(CliError::Invalid(format!("missing input file {}", p.display())))
    }
}

pub struct Inputs {
    pub cfg: SimConfig,
    pub net: Network,
    pub requests: Vec<Request>,
    pub vehicles: Vec<VehicleState>,
    /// (file name, sha256) of every input read.
    pub digests: Vec<(String, String)>,
}

fn digest(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn resolve_config(args: &SimArgs) -> Result<(SimConfig, Option<PathBuf>), CliError> {
    let path = args
        .config
        .clone()
        .or_else(|| std::env::var_os("RIDEPOOL_CONFIG").map(PathBuf::from));
    let mut cfg = SimConfig::default();
    if let Some(p) = &path {
        let text = fs::read_to_string(p)
            .map_err(|e| CliError::Invalid(format!("config {}: {e}", p.display())))?;
        cfg.apply_text(&text)?;
    }
    for o in &args.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| CliError::Invalid(format!("--set expects key=value, got `{o}`")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(a) = &args.algo {
        cfg.set("algo", a)?;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(h) = args.horizon {
        cfg.set("horizon", &h.to_string())?;
    }
    cfg.validate()?;
    Ok((cfg, path))
}

pub fn load_inputs(args: &SimArgs) -> Result<Inputs, CliError> {
    let (cfg, cfg_path) = resolve_config(args)?;
    let nodes = existing(pick(&args.net.nodes, &args.net.data, "nodes.csv")?)?;
    let edges = existing(pick(&args.net.edges, &args.net.data, "edges.csv")?)?;
    let requests = existing(pick(&args.requests, &args.net.data, "requests.csv")?)?;
    let vehicles = existing(pick(&args.vehicles, &args.net.data, "vehicles.csv")?)?;
    let net = read_network(&nodes, &edges)?;
    let reqs = read_requests(&requests, &net, cfg.max_wait, cfg.max_detour)?;
    let vs = read_vehicles(&vehicles, &net, cfg.capacity)?;
    if vs.is_empty() {
        return Err(CliError::Invalid(format!("{}: no vehicles", vehicles.display())));
    }
    let mut digests = Vec::new();
    for p in [&nodes, &edges, &requests, &vehicles].into_iter().chain(cfg_path.as_ref()) {
        digests.push((p.display().to_string(), digest(p)?));
    }
    Ok(Inputs { cfg, net, requests: reqs, vehicles: vs, digests })
}

/// Resolved config in loadable form with input digests as comments.
pub fn manifest(inputs: &Inputs, cfg: &SimConfig) -> String {
    let mut s = format!("# ridepool {}\n", env!("CARGO_PKG_VERSION"));
    for (name, d) in &inputs.digests {
        s.push_str(&format!("# input {name} sha256={d}\n"));
    }
    s.push_str(&cfg.to_text());
    s
}

fn out_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))
}

fn write(path: PathBuf, text: &str) -> Result<(), CliError> {
    write_text(&path, text).map_err(|e| CliError::Runtime(e.to_string()))
}

fn simulate(args: &SimArgs) -> Result<(), CliError> {
    let inputs = load_inputs(args)?;
    out_dir(&args.out)?;
    let out = run_simulation(&inputs.net, &inputs.cfg, &inputs.requests, &inputs.vehicles);
    write(args.out.join("metrics.csv"), &format!("{METRICS_HEADER}\n{}\n", metrics_row(&out.metrics)))?;
    write(args.out.join("epochs.csv"), &epochs_csv(&out.epochs))?;
    write(args.out.join("events.csv"), &events_csv(&out.events))?;
    write(args.out.join("manifest.txt"), &manifest(&inputs, &inputs.cfg))?;
    let m = &out.metrics;
    println!(
        "{}: served {}/{} (SR {:.4}), VMT {:.1} m, shared {:.4}",
        m.algo, m.served, m.requests, m.service_rate, m.vmt_m, m.shared_rate
    );
    Ok(())
}

fn compare(args: &SimArgs, algos: &[String]) -> Result<(), CliError> {
    let inputs = load_inputs(args)?;
    let algos: Vec<Algorithm> = algos
        .iter()
        .map(|a| a.parse().map_err(CliError::Invalid))
        .collect::<Result<_, _>>()?;
    out_dir(&args.out)?;
    let rows = compare_algorithms(&inputs.net, &inputs.cfg, &inputs.requests, &inputs.vehicles, &algos);
    println!("{:<10} {:>8} {:>12} {:>8} {:>8} {:>10}", "algo", "SR%", "VMT_m", "VMT%", "shared%", "runtime_s");
    for r in &rows {
        let m = &r.metrics;
        println!(
            "{:<10} {:>8.2} {:>12.1} {:>8.2} {:>8.2} {:>10.3}",
            m.algo.to_string(),
            100.0 * m.service_rate,
            m.vmt_m,
            r.vmt_pct,
            100.0 * m.shared_rate,
            m.runtime_s
        );
    }
    write(args.out.join("comparison.csv"), &comparison_csv(&rows))?;
    write(args.out.join("manifest.txt"), &manifest(&inputs, &inputs.cfg))?;
    Ok(())
}

fn validate(args: &SimArgs) -> Result<(), CliError> {
    let inputs = load_inputs(args)?;
    println!(
        "ok: {} nodes, {} arcs, {} requests, {} vehicles",
        inputs.net.node_count(),
        inputs.net.arc_count(),
        inputs.requests.len(),
        inputs.vehicles.len()
    );
    Ok(())
}

fn read_assigned(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let bad = |m: String| CliError::Invalid(format!("{}: {m}", path.display()));
    let col = rdr
        .headers()
        .map_err(|e| bad(e.to_string()))?
        .iter()
        .position(|h| h == "assigned")
        .ok_or_else(|| bad("missing column `assigned`".into()))?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let v = rec.get(col).unwrap_or("");
        out.push(v.parse().map_err(|_| bad(format!("row {}: bad assigned count `{v}`", i + 1)))?);
    }
    Ok(out)
}

fn analyze_lag(epochs: &Path, max_lag: usize, prefix: &Path) -> Result<(), CliError> {
    let series = read_assigned(epochs)?;
    let curve = slope_curve(&series, max_lag).map_err(|e| CliError::Invalid(e.to_string()))?;
    let base = prefix.display().to_string();
    if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        out_dir(dir)?;
    }
    write(PathBuf::from(format!("{base}_slopes.csv")), &slopes_csv(&curve))?;
    write(PathBuf::from(format!("{base}_slopes.svg")), &slopes_svg(&curve))?;
    for r in &curve {
        write(PathBuf::from(format!("{base}_lag{}.svg", r.lag)), &lag_svg(r))?;
    }
    for r in &curve {
        println!("lag {:>3}: slope {:+.4}  r {:+.4}", r.lag, r.slope, r.r);
    }
    Ok(())
}

fn gen_demand(net: &NetArgs, spec: DemandSpec, out: &Path) -> Result<(), CliError> {
    let nodes = existing(pick(&net.nodes, &net.data, "nodes.csv")?)?;
    let edges = existing(pick(&net.edges, &net.data, "edges.csv")?)?;
    let network = read_network(&nodes, &edges)?;
    if !(spec.horizon > 0.0) {
        return Err(CliError::Invalid("--horizon must be positive".into()));
    }
    let reqs = generate(&spec, &network);
    write_requests(out, &reqs).map_err(|e| CliError::Runtime(e.to_string()))?;
    println!("wrote {} requests to {}", reqs.len(), out.display());
    Ok(())
}

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(a) => simulate(&a),
        Command::Compare { sim, algos } => compare(&sim, &algos),
        Command::Validate(a) => validate(&a),
        Command::AnalyzeLag { epochs, max_lag, out_prefix } => analyze_lag(&epochs, max_lag, &out_prefix),
        Command::GenDemand { net, rate, horizon, seed, max_wait, max_detour, out } => gen_demand(
            &net,
            DemandSpec { rate, horizon, seed, max_wait, max_detour },
            &out,
        ),
    }
}

/// Parses `argv` and runs the command, printing errors to stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
