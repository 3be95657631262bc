//! Maximum-weight matchings as binary programs.

use super::bnb::bnb_solve_with;
use super::lp::{Cmp, LpProblem, Sense};
use super::BnbOptions;

/// Maximum-weight matching on an undirected graph with `n_nodes` nodes.
/// Returns the chosen edge indices in ascending order. Edges with
/// non-positive weight or identical endpoints are never chosen.
pub fn max_weight_general_matching(n_nodes: usize, edges: &[(usize, usize, f64)]) -> Vec<usize> {
    max_weight_matching_with(n_nodes, edges, &BnbOptions::default())
}

pub fn max_weight_matching_with(
    n_nodes: usize,
    edges: &[(usize, usize, f64)],
    opts: &BnbOptions,
) -> Vec<usize> {
    let mut lp = LpProblem::new(Sense::Max);
    let mut incident: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_nodes];
    let mut var_edge = Vec::new();
    for (e, &(a, b, w)) in edges.iter().enumerate() {
        if a == b || !(w > 0.0) {
            continue;
        }
        let j = lp.add_var(format!("e{e}"), w, 1.0);
        var_edge.push(e);
        incident[a].push((j, 1.0));
        incident[b].push((j, 1.0));
    }
    if var_edge.is_empty() {
        return Vec::new();
    }
    for row in incident {
        if row.len() > 1 {
            lp.add_row(row, Cmp::Le, 1.0);
        }
    }
    let sol = bnb_solve_with(&lp, opts);
    sol.ones().into_iter().map(|j| var_edge[j]).collect()
}

/// Maximum-weight matching between `n_left` and `n_right` nodes; edges are
/// `(left, right, weight)`.
pub fn max_weight_bipartite_matching(
    n_left: usize,
    n_right: usize,
    edges: &[(usize, usize, f64)],
) -> Vec<usize> {
    bipartite_matching_with(n_left, n_right, edges, &BnbOptions::default())
}

pub fn bipartite_matching_with(
    n_left: usize,
    n_right: usize,
    edges: &[(usize, usize, f64)],
    opts: &BnbOptions,
) -> Vec<usize> {
    let shifted: Vec<(usize, usize, f64)> =
        edges.iter().map(|&(l, r, w)| (l, n_left + r, w)).collect();
    max_weight_matching_with(n_left + n_right, &shifted, opts)
}

/// Total weight of the selected edges.
pub fn matching_weight(edges: &[(usize, usize, f64)], chosen: &[usize]) -> f64 {
    chosen.iter().map(|&e| edges[e].2).sum()
}
