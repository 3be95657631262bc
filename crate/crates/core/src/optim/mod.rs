//! Small dense optimisation kernels: simplex with duals, binary branch and
//! bound, matchings and unit transportation.

mod bnb;
mod lp;
mod matching;
mod transport;

pub use bnb::{bnb_solve, bnb_solve_with, BnbOptions, IlpSolution, IlpStatus};
pub use lp::{
    simplex_solve, simplex_solve_with, Cmp, LpOptions, LpProblem, LpSolution, LpStatus, Row, Sense,
};
pub use matching::{
    bipartite_matching_with, matching_weight, max_weight_bipartite_matching,
    max_weight_general_matching, max_weight_matching_with,
};
pub use transport::transportation_solve;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum OptimError {
    #[error("inconsistent problem dimensions")]
    Dimension,
    #[error("non-finite coefficient")]
    NonFinite,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_variable_max() {
        let mut p = LpProblem::new(Sense::Max);
        let x = p.add_var("x", 1.0, f64::INFINITY);
        p.add_row(vec![(x, 1.0)], Cmp::Le, 3.0);
        let s = simplex_solve(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 3.0).abs() < 1e-9);
        assert!((s.duals[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_lp_terminates() {
        // classic cycling example under the largest-coefficient rule
        let mut p = LpProblem::new(Sense::Max);
        for (i, c) in [10.0, -57.0, -9.0, -24.0].iter().enumerate() {
            p.add_var(format!("x{i}"), *c, f64::INFINITY);
        }
        p.add_row(vec![(0, 0.5), (1, -5.5), (2, -2.5), (3, 9.0)], Cmp::Le, 0.0);
        p.add_row(vec![(0, 0.5), (1, -1.5), (2, -0.5), (3, 1.0)], Cmp::Le, 0.0);
        p.add_row(vec![(0, 1.0)], Cmp::Le, 1.0);
        let s = simplex_solve(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn statuses() {
        let mut p = LpProblem::new(Sense::Min);
        let x = p.add_var("x", 1.0, f64::INFINITY);
        p.add_row(vec![(x, 1.0)], Cmp::Ge, 2.0);
        p.add_row(vec![(x, 1.0)], Cmp::Le, 1.0);
        assert_eq!(simplex_solve(&p).status, LpStatus::Infeasible);
        let mut p = LpProblem::new(Sense::Max);
        let x = p.add_var("x", 1.0, f64::INFINITY);
        p.add_row(vec![(x, 1.0)], Cmp::Ge, 2.0);
        assert_eq!(simplex_solve(&p).status, LpStatus::Unbounded);
    }

    #[test]
    fn assignment_polytope_is_integral() {
        let w = [[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]];
        let mut p = LpProblem::new(Sense::Min);
        for i in 0..3 {
            for j in 0..3 {
                p.add_var(format!("x{i}{j}"), w[i][j], f64::INFINITY);
            }
        }
        for i in 0..3 {
            p.add_row((0..3).map(|j| (3 * i + j, 1.0)).collect(), Cmp::Eq, 1.0);
            p.add_row((0..3).map(|j| (3 * j + i, 1.0)).collect(), Cmp::Eq, 1.0);
        }
        let s = simplex_solve(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        for v in &s.x {
            assert!((v - v.round()).abs() < 1e-9);
        }
        let perms = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        let best = perms
            .iter()
            .map(|p| (0..3).map(|i| w[i][p[i]]).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        assert!((s.objective - best).abs() < 1e-9);
    }

    #[test]
    fn set_packing_matches_enumeration() {
        // items {a,b}, {b,c}, {a,c} with values 3, 2, 2
        let mut p = LpProblem::new(Sense::Max);
        for (i, v) in [3.0, 2.0, 2.0].iter().enumerate() {
            p.add_var(format!("s{i}"), *v, 1.0);
        }
        p.add_row(vec![(0, 1.0), (2, 1.0)], Cmp::Le, 1.0);
        p.add_row(vec![(0, 1.0), (1, 1.0)], Cmp::Le, 1.0);
        p.add_row(vec![(1, 1.0), (2, 1.0)], Cmp::Le, 1.0);
        let s = bnb_solve(&p);
        assert!(s.optimal);
        let mut best = 0.0f64;
        for mask in 0u32..8 {
            let x: Vec<f64> = (0..3).map(|j| ((mask >> j) & 1) as f64).collect();
            if p.violation(&x) <= 1e-9 {
                best = best.max(p.value(&x));
            }
        }
        assert!((s.objective - best).abs() < 1e-9);
        assert_eq!(s.ones(), vec![0]);
    }

    #[test]
    fn matching_examples() {
        assert_eq!(max_weight_bipartite_matching(1, 1, &[(0, 0, 2.0)]), vec![0]);
        let edges = [(0, 0, 5.0), (0, 1, 9.0), (1, 0, 9.0), (1, 1, 5.0)];
        let m = max_weight_bipartite_matching(2, 2, &edges);
        assert_eq!(m, vec![1, 2]);
        assert_eq!(matching_weight(&edges, &m), 18.0);
        assert!(max_weight_bipartite_matching(2, 2, &[(0, 0, -1.0), (1, 1, -3.0)]).is_empty());

        let tri = [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)];
        assert_eq!(max_weight_general_matching(3, &tri), vec![0]);
        let path = [(0, 1, 1.0), (1, 2, 5.0), (2, 3, 1.0)];
        assert_eq!(max_weight_general_matching(4, &path), vec![1]);
    }

    #[test]
    fn node_limit_reports_flag() {
        let tri = [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)];
        let opts = BnbOptions {
            node_limit: Some(1),
            ..BnbOptions::default()
        };
        assert!(max_weight_matching_with(3, &tri, &opts).is_empty());
    }

    #[test]
    fn transportation_examples() {
        let (pairs, cost) = transportation_solve(&[vec![3.0, 7.0]]);
        assert_eq!(pairs, vec![(0, 0)]);
        assert_eq!(cost, 3.0);
        let (pairs, _) = transportation_solve(&[]);
        assert!(pairs.is_empty());
        let (pairs, cost) = transportation_solve(&[vec![5.0], vec![2.0]]);
        assert_eq!(pairs, vec![(1, 0)]);
        assert_eq!(cost, 2.0);
        // greedy would take (0,0); optimum needs reassignment
        let (pairs, cost) = transportation_solve(&[vec![1.0, 2.0], vec![1.0, 10.0]]);
        assert_eq!(pairs, vec![(0, 1), (1, 0)]);
        assert_eq!(cost, 3.0);
    }
}
