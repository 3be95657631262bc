//! Uniform synthetic demand.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{Request, RequestId};
use crate::network::Network;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemandSpec {
    /// Requests per minute.
    pub rate: u32,
    /// Seconds.
    pub horizon: f64,
    pub seed: u64,
    pub max_wait: f64,
    pub max_detour: f64,
}

/// Each minute `(m, m + 60]` of the horizon gets exactly `rate` requests
/// (pro rata for a trailing partial minute) with uniform emergence times and
/// origin/destination drawn uniformly over distinct node pairs. Ids follow
/// emergence order starting at 1.
pub fn generate(spec: &DemandSpec, net: &Network) -> Vec<Request> {
    let nodes = net.node_ids();
    if spec.rate == 0 || nodes.len() < 2 || spec.horizon <= 0.0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::new();
    let mut start = 0.0;
    while start < spec.horizon {
        let end = (start + 60.0).min(spec.horizon);
        let count = (spec.rate as f64 * (end - start) / 60.0).round() as usize;
        for _ in 0..count {
            // (start, end]: flip the half-open sample
            let t = end - rng.gen::<f64>() * (end - start);
            let o = rng.gen_range(0..nodes.len());
            let mut d = rng.gen_range(0..nodes.len() - 1);
            if d >= o {
                d += 1;
            }
            out.push(Request {
                id: RequestId(0),
                origin: nodes[o],
                destination: nodes[d],
                emergence: t,
                max_wait: spec.max_wait,
                max_detour: spec.max_detour,
            });
        }
        start = end;
    }
    out.sort_by(|a, b| a.emergence.total_cmp(&b.emergence));
    for (i, r) in out.iter_mut().enumerate() {
        r.id = RequestId(i as u32 + 1);
    }
    out
}
