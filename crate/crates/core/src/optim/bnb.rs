//! Best-bound branch and bound for binary programs.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::lp::{simplex_solve_with, Cmp, LpOptions, LpProblem, LpStatus, Sense};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BnbOptions {
    /// Stop after this many LP relaxations and return the incumbent.
    pub node_limit: Option<usize>,
    pub integrality_tol: f64,
    pub lp: LpOptions,
}

impl Default for BnbOptions {
    fn default() -> Self {
        BnbOptions {
            node_limit: None,
            integrality_tol: 1e-6,
            lp: LpOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IlpStatus {
    Optimal,
    /// Node limit reached; `x` is the best solution found, if any.
    NodeLimit,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IlpSolution {
    pub status: IlpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub optimal: bool,
    pub nodes: usize,
}

impl IlpSolution {
    pub fn has_solution(&self) -> bool {
        self.objective.is_finite()
    }

    /// Indices of variables set to one.
    pub fn ones(&self) -> Vec<usize> {
        (0..self.x.len()).filter(|&j| self.x[j] > 0.5).collect()
    }
}

struct Node {
    bound: f64,
    id: usize,
    fix: Vec<Option<bool>>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // max-heap: smaller bound, then smaller id, pops first
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

enum Relaxation {
    Infeasible,
    Solved { value: f64, x: Vec<f64> },
}

/// Solves the LP relaxation with fixed variables substituted out. Values are
/// in minimisation form.
fn relax(p: &LpProblem, fix: &[Option<bool>], sign: f64, opts: &LpOptions) -> Relaxation {
    let n = p.num_vars();
    let mut map = vec![usize::MAX; n];
    let mut sub = LpProblem::new(Sense::Min);
    let mut constant = 0.0;
    for j in 0..n {
        match fix[j] {
            Some(true) => constant += sign * p.objective[j],
            Some(false) => {}
            None => {
                map[j] = sub.add_var("", sign * p.objective[j], p.upper[j].min(1.0));
            }
        }
    }
    for row in &p.rows {
        let mut rhs = row.rhs;
        let mut coeffs = Vec::with_capacity(row.coeffs.len());
        for &(j, a) in &row.coeffs {
            match fix[j] {
                Some(true) => rhs -= a,
                Some(false) => {}
                None => coeffs.push((map[j], a)),
            }
        }
        if coeffs.is_empty() {
            let tol = 1e-9;
            let ok = match row.cmp {
                Cmp::Le => 0.0 <= rhs + tol,
                Cmp::Ge => 0.0 >= rhs - tol,
                Cmp::Eq => rhs.abs() <= tol,
            };
            if !ok {
                return Relaxation::Infeasible;
            }
            continue;
        }
        sub.add_row(coeffs, row.cmp, rhs);
    }
    let sol = simplex_solve_with(&sub, opts);
    if sol.status != LpStatus::Optimal {
        return Relaxation::Infeasible;
    }
    let mut x = vec![0.0; n];
    for j in 0..n {
        x[j] = match fix[j] {
            Some(true) => 1.0,
            Some(false) => 0.0,
            None => sol.x[map[j]],
        };
    }
    Relaxation::Solved {
        value: constant + sol.objective,
        x,
    }
}

/// Optimises `p` over binary vectors (all variables are treated as 0/1).
pub fn bnb_solve(p: &LpProblem) -> IlpSolution {
    bnb_solve_with(p, &BnbOptions::default())
}

pub fn bnb_solve_with(p: &LpProblem, opts: &BnbOptions) -> IlpSolution {
    let n = p.num_vars();
    let sign = match p.sense {
        Sense::Min => 1.0,
        Sense::Max => -1.0,
    };
    let tol = opts.integrality_tol;
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        id: 0,
        fix: vec![None; n],
    });
    let mut next_id = 1;
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut nodes = 0usize;
    let mut hit_limit = false;

    while let Some(node) = heap.pop() {
        if let Some((best, _)) = &incumbent {
            if node.bound >= *best - 1e-9 {
                continue;
            }
        }
        if opts.node_limit.map_or(false, |l| nodes >= l) {
            hit_limit = true;
            break;
        }
        nodes += 1;
        let (value, x) = match relax(p, &node.fix, sign, &opts.lp) {
            Relaxation::Infeasible => continue,
            Relaxation::Solved { value, x } => (value, x),
        };
        if let Some((best, _)) = &incumbent {
            if value >= *best - 1e-9 {
                continue;
            }
        }
        // most fractional variable, ties to the lowest index
        let mut branch: Option<(usize, f64)> = None;
        for (j, &v) in x.iter().enumerate() {
            let frac = (v - v.round()).abs();
            if frac > tol && branch.map_or(true, |(_, f)| frac > f + 1e-12) {
                branch = Some((j, frac));
            }
        }
        match branch {
            None => {
                let xi: Vec<f64> = x.iter().map(|v| v.round()).collect();
                let val = sign * p.value(&xi);
                if incumbent.as_ref().map_or(true, |(b, _)| val < *b - 1e-9) {
                    incumbent = Some((val, xi));
                }
            }
            Some((j, _)) => {
                for choice in [true, false] {
                    let mut fix = node.fix.clone();
                    fix[j] = Some(choice);
                    heap.push(Node {
                        bound: value,
                        id: next_id,
                        fix,
                    });
                    next_id += 1;
                }
            }
        }
    }
    match incumbent {
        Some((val, x)) => IlpSolution {
            status: if hit_limit {
                IlpStatus::NodeLimit
            } else {
                IlpStatus::Optimal
            },
            x,
            objective: sign * val,
            optimal: !hit_limit,
            nodes,
        },
        None => IlpSolution {
            status: if hit_limit {
                IlpStatus::NodeLimit
            } else {
                IlpStatus::Infeasible
            },
            x: vec![0.0; n],
            objective: f64::NAN,
            optimal: false,
            nodes,
        },
    }
}
