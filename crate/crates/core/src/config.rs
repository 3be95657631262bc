//! Flat `key = value` run configuration.

use std::fmt::Write;
use std::str::FromStr;
use std::time::Duration;

use thiserror::Error;

use crate::assign::{ce::CeOptions, cg::CgOptions, Algorithm, AssignOptions};
use crate::ctsp::{CtspMode, CtspPolicy};
use crate::optim::BnbOptions;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("config key `{key}`: bad value `{value}` ({reason})")]
    BadValue { key: String, value: String, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub interval: f64,
    pub horizon: f64,
    pub capacity: u32,
    pub max_wait: f64,
    pub max_detour: f64,
    pub algo: Algorithm,
    pub ctsp: CtspPolicy,
    /// Seconds of look-ahead on future requests.
    pub future_window: f64,
    pub seed: u64,
    pub rebalance: bool,
    pub penalty: f64,
    pub node_limit: Option<usize>,
    pub tolerance: f64,
    pub kappa: f64,
    pub rtv_timeout: f64,
    /// `None` picks the algorithm default (on for RTV and CG).
    pub reassign: Option<bool>,
    pub cg_time_limit: Option<f64>,
    pub cg_subset_cap: usize,
    pub ce_u: Option<f64>,
    pub ce_labels: usize,
    pub threads: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            interval: 60.0,
            horizon: 3600.0,
            capacity: 4,
            max_wait: 300.0,
            max_detour: 600.0,
            algo: Algorithm::La,
            ctsp: CtspPolicy::default(),
            future_window: 0.0,
            seed: 0,
            rebalance: true,
            penalty: 1e7,
            node_limit: None,
            tolerance: 1e-6,
            kappa: 2.0,
            rtv_timeout: 10.0,
            reassign: None,
            cg_time_limit: None,
            cg_subset_cap: 1000,
            ce_u: None,
            ce_labels: 1,
            threads: 1,
        }
    }
}

/// Every accepted key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("epoch.interval", "batching interval in seconds (60)"),
    ("horizon", "simulated seconds (3600)"),
    ("vehicle.capacity", "default seats per vehicle (4)"),
    ("qos.max_wait_s", "default maximum wait (300)"),
    ("qos.max_detour_s", "default maximum detour (600)"),
    ("algo", "la | la-mr | la-mr-ns | la-mr-ps | la-mr-ce | rtv | fast-rtv | cg"),
    ("ctsp.mode", "exact | insertion | oof | lrp (oof)"),
    ("ctsp.enumerate_limit", "exact search threshold (12)"),
    ("ctsp.lrp_eta", "LRP re-plan budget in stops (12)"),
    ("ctsp.follower_pruning", "true | false (true)"),
    ("future.window_s", "look-ahead on future requests in seconds (0)"),
    ("seed", "random seed (0)"),
    ("rebalance.enabled", "true | false (true)"),
    ("solver.penalty_M", "unserved request penalty (1e7)"),
    ("solver.node_limit", "branch-and-bound node limit or none (none)"),
    ("solver.tolerance", "integrality tolerance (1e-6)"),
    ("la.carryover_kappa", "penalty multiplier for carried requests (2)"),
    ("rtv.timeout_s", "fast-rtv enumeration budget (10)"),
    ("rtv.reassign", "true | false | default (default)"),
    ("cg.time_limit_s", "column generation budget or none (none)"),
    ("cg.subset_cap", "subsets priced per vehicle per call (1000)"),
    ("ce.U", "null-partition value or none for solver.penalty_M (none)"),
    ("ce.labels_per_node", "cycle search labels kept per node (1)"),
    ("threads", "worker threads for oracle calls (1)"),
];

fn bad(key: &str, value: &str, reason: impl ToString) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.to_string(),
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: ToString,
{
    value.parse().map_err(|e: T::Err| bad(key, value, e))
}

fn positive(key: &str, value: &str) -> Result<f64, ConfigError> {
    let x: f64 = parse(key, value)?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(bad(key, value, "must be positive"))
    }
}

fn non_negative(key: &str, value: &str) -> Result<f64, ConfigError> {
    let x: f64 = parse(key, value)?;
    if x >= 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(bad(key, value, "must be non-negative"))
    }
}

fn optional<T>(value: &str, f: impl FnOnce() -> Result<T, ConfigError>) -> Result<Option<T>, ConfigError> {
    if value == "none" {
        Ok(None)
    } else {
        f().map(Some)
    }
}

fn count(key: &str, value: &str) -> Result<usize, ConfigError> {
    let n: usize = parse(key, value)?;
    if n == 0 {
        return Err(bad(key, value, "must be at least 1"));
    }
    Ok(n)
}

impl SimConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value;
        match key {
            "epoch.interval" => self.interval = positive(key, v)?,
            "horizon" => self.horizon = positive(key, v)?,
            "vehicle.capacity" => self.capacity = count(key, v)? as u32,
            "qos.max_wait_s" => self.max_wait = positive(key, v)?,
            "qos.max_detour_s" => self.max_detour = non_negative(key, v)?,
            "algo" => self.algo = parse(key, v)?,
            "ctsp.mode" => self.ctsp.mode = parse::<CtspMode>(key, v)?,
            "ctsp.enumerate_limit" => self.ctsp.enumerate_limit = count(key, v)?,
            "ctsp.lrp_eta" => self.ctsp.lrp_eta = count(key, v)?,
            "ctsp.follower_pruning" => self.ctsp.follower_pruning = parse(key, v)?,
            "future.window_s" => self.future_window = non_negative(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "rebalance.enabled" => self.rebalance = parse(key, v)?,
            "solver.penalty_M" => self.penalty = positive(key, v)?,
            "solver.node_limit" => self.node_limit = optional(v, || count(key, v))?,
            "solver.tolerance" => self.tolerance = positive(key, v)?,
            "la.carryover_kappa" => {
                self.kappa = positive(key, v)?;
                if self.kappa < 1.0 {
                    return Err(bad(key, v, "must be at least 1"));
                }
            }
            "rtv.timeout_s" => self.rtv_timeout = non_negative(key, v)?,
            "rtv.reassign" => {
                self.reassign = if v == "default" { None } else { Some(parse(key, v)?) }
            }
            "cg.time_limit_s" => self.cg_time_limit = optional(v, || non_negative(key, v))?,
            "cg.subset_cap" => self.cg_subset_cap = count(key, v)?,
            "ce.U" => self.ce_u = optional(v, || positive(key, v))?,
            "ce.labels_per_node" => self.ce_labels = count(key, v)?,
            "threads" => self.threads = count(key, v)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut c = SimConfig::default();
        c.apply_text(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.interval > self.horizon {
            return Err(bad("epoch.interval", &self.interval.to_string(), "exceeds horizon"));
        }
        Ok(())
    }

    pub fn reassigns(&self) -> bool {
        self.reassign.unwrap_or_else(|| self.algo.reassigns())
    }

    /// Value of `key` as it would be written in a config file.
    pub fn get(&self, key: &str) -> Option<String> {
        let opt = |x: Option<String>| x.unwrap_or_else(|| "none".into());
        Some(match key {
            "epoch.interval" => self.interval.to_string(),
            "horizon" => self.horizon.to_string(),
            "vehicle.capacity" => self.capacity.to_string(),
            "qos.max_wait_s" => self.max_wait.to_string(),
            "qos.max_detour_s" => self.max_detour.to_string(),
            "algo" => self.algo.to_string(),
            "ctsp.mode" => self.ctsp.mode.to_string(),
            "ctsp.enumerate_limit" => self.ctsp.enumerate_limit.to_string(),
            "ctsp.lrp_eta" => self.ctsp.lrp_eta.to_string(),
            "ctsp.follower_pruning" => self.ctsp.follower_pruning.to_string(),
            "future.window_s" => self.future_window.to_string(),
            "seed" => self.seed.to_string(),
            "rebalance.enabled" => self.rebalance.to_string(),
            "solver.penalty_M" => self.penalty.to_string(),
            "solver.node_limit" => opt(self.node_limit.map(|n| n.to_string())),
            "solver.tolerance" => self.tolerance.to_string(),
            "la.carryover_kappa" => self.kappa.to_string(),
            "rtv.timeout_s" => self.rtv_timeout.to_string(),
            "rtv.reassign" => self.reassign.map_or("default".into(), |b| b.to_string()),
            "cg.time_limit_s" => opt(self.cg_time_limit.map(|n| n.to_string())),
            "cg.subset_cap" => self.cg_subset_cap.to_string(),
            "ce.U" => opt(self.ce_u.map(|n| n.to_string())),
            "ce.labels_per_node" => self.ce_labels.to_string(),
            "threads" => self.threads.to_string(),
            _ => return None,
        })
    }

    /// All keys with resolved values, one `key = value` per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, _) in KEYS {
            let _ = writeln!(s, "{k} = {}", self.get(k).expect("listed key"));
        }
        s
    }

    pub fn assign_options(&self) -> AssignOptions {
        let bnb = BnbOptions {
            node_limit: self.node_limit,
            integrality_tol: self.tolerance,
            ..BnbOptions::default()
        };
        AssignOptions {
            bnb,
            rtv_timeout: Duration::from_secs_f64(self.rtv_timeout),
            cg: CgOptions {
                time_limit: self.cg_time_limit.map(Duration::from_secs_f64),
                subset_cap: self.cg_subset_cap,
                bnb,
            },
            ce: CeOptions {
                u: self.ce_u,
                labels_per_node: self.ce_labels,
                prune: true,
            },
        }
    }
}
