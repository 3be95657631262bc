//! Exact depth-first stop ordering with precedence masks.

use crate::model::{RouteStart, Stop, StopKind, TIME_EPS};
use crate::network::Network;

/// Hard cap on stops handled by the bitmask search.
pub const MAX_SEARCH_STOPS: usize = 64;

const COST_EPS: f64 = 1e-9;

pub(crate) struct SearchProblem<'a> {
    pub net: &'a Network,
    pub start: RouteStart,
    /// Stops sorted by key; index order is the tie-break order.
    pub stops: &'a [Stop],
    /// Index sequences whose relative order must be preserved.
    pub chains: &'a [Vec<usize>],
    pub use_followers: bool,
}

struct Ctx {
    n: usize,
    dist: Vec<Vec<f64>>, // index n is the start node
    must_precede: Vec<u64>,
    partner: Vec<Option<usize>>,
    bound: Vec<f64>,
    kind: Vec<StopKind>,
    earliest: Vec<f64>,
    deadline: Vec<f64>,
    ride_limit: Vec<f64>,
    capacity: i64,
    best_cost: f64,
    best: Option<Vec<usize>>,
    order: Vec<usize>,
    pick_time: Vec<f64>,
    nodes_expanded: u64,
}

/// Returns the cheapest feasible ordering (as indices into `stops`) and its
/// travel cost. Among orderings within `COST_EPS` of the optimum the
/// lexicographically smallest index sequence wins.
pub(crate) fn search(p: &SearchProblem) -> Option<(Vec<usize>, f64)> {
    search_counted(p).0
}

pub(crate) fn search_counted(p: &SearchProblem) -> (Option<(Vec<usize>, f64)>, u64) {
    let n = p.stops.len();
    if n == 0 {
        return (Some((Vec::new(), 0.0)), 0);
    }
    if n > MAX_SEARCH_STOPS {
        return (None, 0);
    }
    let mut nodes: Vec<_> = p.stops.iter().map(|s| s.node).collect();
    nodes.push(p.start.node);
    let dist: Vec<Vec<f64>> = nodes
        .iter()
        .map(|&a| nodes.iter().map(|&b| p.net.time(a, b)).collect())
        .collect();

    let mut partner = vec![None; n];
    let mut must_precede = vec![0u64; n];
    for (j, s) in p.stops.iter().enumerate() {
        if s.kind == StopKind::Dropoff {
            if let Some(i) = p
                .stops
                .iter()
                .position(|o| o.request == s.request && o.kind == StopKind::Pickup)
            {
                partner[j] = Some(i);
                must_precede[j] |= 1 << i;
            }
        }
    }
    for chain in p.chains {
        for w in chain.windows(2) {
            must_precede[w[1]] |= 1 << w[0];
        }
    }
    // Latest admissible service time per stop, used for reachability pruning.
    let bound: Vec<f64> = (0..n)
        .map(|j| match partner[j] {
            Some(i) => p.stops[i].deadline + p.stops[j].ride_limit,
            None => p.stops[j].deadline,
        })
        .collect();
    if p.use_followers {
        // i must precede j when visiting j first already makes i late.
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let at_j = (p.start.time + dist[n][j]).max(p.stops[j].earliest);
                if at_j + dist[j][i] > bound[i] + TIME_EPS {
                    must_precede[j] |= 1 << i;
                }
            }
        }
    }
    let mut ctx = Ctx {
        n,
        dist,
        must_precede,
        partner,
        bound,
        kind: p.stops.iter().map(|s| s.kind).collect(),
        earliest: p.stops.iter().map(|s| s.earliest).collect(),
        deadline: p.stops.iter().map(|s| s.deadline).collect(),
        ride_limit: p.stops.iter().map(|s| s.ride_limit).collect(),
        capacity: p.start.capacity as i64,
        best_cost: f64::INFINITY,
        best: None,
        order: Vec::with_capacity(n),
        pick_time: vec![f64::NAN; n],
        nodes_expanded: 0,
    };
    dfs(&mut ctx, 0, n, p.start.time, 0.0, p.start.load as i64);
    let expanded = ctx.nodes_expanded;
    (ctx.best.map(|o| (o, ctx.best_cost)), expanded)
}

fn dfs(ctx: &mut Ctx, visited: u64, last: usize, time: f64, cost: f64, load: i64) {
    ctx.nodes_expanded += 1;
    if cost >= ctx.best_cost - COST_EPS {
        return;
    }
    if ctx.order.len() == ctx.n {
        ctx.best_cost = cost;
        ctx.best = Some(ctx.order.clone());
        return;
    }
    // every unvisited stop must still be reachable in time
    for u in 0..ctx.n {
        if visited & (1 << u) == 0 && time + ctx.dist[last][u] > ctx.bound[u] + TIME_EPS {
            return;
        }
    }
    for j in 0..ctx.n {
        let bit = 1u64 << j;
        if visited & bit != 0 || ctx.must_precede[j] & !visited != 0 {
            continue;
        }
        let leg = ctx.dist[last][j];
        if !leg.is_finite() {
            continue;
        }
        let mut t = time + leg;
        let new_load;
        match ctx.kind[j] {
            StopKind::Pickup => {
                t = t.max(ctx.earliest[j]);
                if t > ctx.deadline[j] + TIME_EPS || load + 1 > ctx.capacity {
                    continue;
                }
                new_load = load + 1;
                ctx.pick_time[j] = t;
            }
            StopKind::Dropoff => {
                let deadline = match ctx.partner[j] {
                    Some(i) => ctx.pick_time[i] + ctx.ride_limit[j],
                    None => ctx.deadline[j],
                };
                if t > deadline + TIME_EPS {
                    continue;
                }
                new_load = load - 1;
            }
        }
        ctx.order.push(j);
        dfs(ctx, visited | bit, j, t, cost + leg, new_load);
        ctx.order.pop();
    }
}
