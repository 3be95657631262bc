//! Epoch-wise request-vehicle assignment algorithms.

pub mod ce;
pub mod cg;
pub mod la;
pub mod rtv;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use crate::epoch::{AssignmentSolution, EpochInstance, TripOracle};
use crate::optim::BnbOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    La,
    LaMr,
    LaMrNs,
    LaMrPs,
    LaMrCe,
    Rtv,
    FastRtv,
    Cg,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::La,
        Algorithm::LaMr,
        Algorithm::LaMrNs,
        Algorithm::LaMrPs,
        Algorithm::LaMrCe,
        Algorithm::Rtv,
        Algorithm::FastRtv,
        Algorithm::Cg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::La => "la",
            Algorithm::LaMr => "la-mr",
            Algorithm::LaMrNs => "la-mr-ns",
            Algorithm::LaMrPs => "la-mr-ps",
            Algorithm::LaMrCe => "la-mr-ce",
            Algorithm::Rtv => "rtv",
            Algorithm::FastRtv => "fast-rtv",
            Algorithm::Cg => "cg",
        }
    }

    /// RTV-style methods may move promised but unboarded requests between
    /// vehicles; the LA family never does.
    pub fn reassigns(self) -> bool {
        matches!(self, Algorithm::Rtv | Algorithm::FastRtv | Algorithm::Cg)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Algorithm::ALL
            .iter()
            .copied()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown algorithm `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssignOptions {
    pub bnb: BnbOptions,
    /// Enumeration budget used by `fast-rtv`.
    pub rtv_timeout: Duration,
    pub cg: cg::CgOptions,
    pub ce: ce::CeOptions,
}

impl Default for AssignOptions {
    fn default() -> Self {
        AssignOptions {
            bnb: BnbOptions::default(),
            rtv_timeout: Duration::from_secs(10),
            cg: cg::CgOptions::default(),
            ce: ce::CeOptions::default(),
        }
    }
}

pub fn assign(
    algo: Algorithm,
    inst: &EpochInstance,
    oracle: &dyn TripOracle,
    opts: &AssignOptions,
) -> AssignmentSolution {
    match algo {
        Algorithm::La => la::la_assign(inst, oracle, &opts.bnb),
        Algorithm::LaMr => la::la_mr_assign(inst, oracle, &opts.bnb),
        Algorithm::LaMrNs => la::la_mr_ns_assign(inst, oracle, &opts.bnb),
        Algorithm::LaMrPs => la::la_mr_ps_assign(inst, oracle, &opts.bnb),
        Algorithm::LaMrCe => ce::la_mr_ce_assign(inst, oracle, &opts.bnb, &opts.ce),
        Algorithm::Rtv => rtv::rtv_assign(
            inst,
            oracle,
            &rtv::RtvOptions {
                timeout: None,
                bnb: opts.bnb,
            },
        ),
        Algorithm::FastRtv => rtv::rtv_assign(
            inst,
            oracle,
            &rtv::RtvOptions {
                timeout: Some(opts.rtv_timeout),
                bnb: opts.bnb,
            },
        ),
        Algorithm::Cg => cg::cg_assign(inst, oracle, &opts.cg),
    }
}
