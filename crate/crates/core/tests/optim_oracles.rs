use proptest::prelude::*;
use ridepool::optim::*;

fn random_lp(n: usize, rows: &[(Vec<i32>, u8, i32)], obj: &[i32], max: bool) -> LpProblem {
    let mut p = LpProblem::new(if max { Sense::Max } else { Sense::Min });
    for (j, &c) in obj.iter().enumerate().take(n) {
        p.add_var(format!("x{j}"), c as f64, 1.0);
    }
    for (coeffs, cmp, rhs) in rows {
        let cmp = match cmp % 3 {
            0 => Cmp::Le,
            1 => Cmp::Ge,
            _ => Cmp::Eq,
        };
        let c: Vec<(usize, f64)> = coeffs
            .iter()
            .take(n)
            .enumerate()
            .filter(|(_, &a)| a != 0)
            .map(|(j, &a)| (j, a as f64))
            .collect();
        if !c.is_empty() {
            p.add_row(c, cmp, *rhs as f64);
        }
    }
    p
}

fn enumerate(p: &LpProblem) -> Option<f64> {
    let n = p.num_vars();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << n) {
        let x: Vec<f64> = (0..n).map(|j| ((mask >> j) & 1) as f64).collect();
        if p.violation(&x) <= 1e-9 {
            let v = p.value(&x);
            best = Some(match (best, p.sense) {
                (None, _) => v,
                (Some(b), Sense::Max) => b.max(v),
                (Some(b), Sense::Min) => b.min(v),
            });
        }
    }
    best
}

fn row_strategy() -> impl Strategy<Value = (Vec<i32>, u8, i32)> {
    (prop::collection::vec(-2i32..=3, 15), 0u8..3, -1i32..=4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn bnb_equals_enumeration(
        n in 1usize..=15,
        rows in prop::collection::vec(row_strategy(), 0..6),
        obj in prop::collection::vec(-5i32..=9, 15),
        max in any::<bool>(),
    ) {
        let p = random_lp(n, &rows, &obj, max);
        let sol = bnb_solve(&p);
        match enumerate(&p) {
            None => prop_assert_eq!(sol.status, IlpStatus::Infeasible),
            Some(best) => {
                prop_assert!(sol.optimal);
                prop_assert!((sol.objective - best).abs() < 1e-6, "{} vs {}", sol.objective, best);
                prop_assert!(p.violation(&sol.x) <= 1e-6);
            }
        }
    }

    #[test]
    fn strong_duality(
        n in 1usize..=10,
        rows in prop::collection::vec(row_strategy(), 1..6),
        obj in prop::collection::vec(-5i32..=9, 15),
        max in any::<bool>(),
    ) {
        let p = random_lp(n, &rows, &obj, max);
        let sol = simplex_solve(&p);
        if sol.status == LpStatus::Optimal {
            prop_assert!(p.violation(&sol.x) <= 1e-7);
            let dual_obj: f64 = p.rows.iter().zip(&sol.duals).map(|(r, y)| r.rhs * y).sum::<f64>()
                + p.upper.iter().zip(&sol.bound_duals).map(|(u, w)| u * w).sum::<f64>();
            prop_assert!((dual_obj - sol.objective).abs() < 1e-6, "{} vs {}", dual_obj, sol.objective);
            // complementary slackness on rows
            for (r, y) in p.rows.iter().zip(&sol.duals) {
                let lhs: f64 = r.coeffs.iter().map(|&(j, a)| a * sol.x[j]).sum();
                prop_assert!((y * (lhs - r.rhs)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn transportation_matches_enumeration(
        rows in 0usize..=6,
        cols in 0usize..=6,
        costs in prop::collection::vec(0u32..50, 36),
    ) {
        let c: Vec<Vec<f64>> = (0..rows)
            .map(|r| (0..cols).map(|k| costs[r * 6 + k] as f64).collect())
            .collect();
        let (pairs, cost) = transportation_solve(&c);
        prop_assert_eq!(pairs.len(), rows.min(cols));
        let mut used_r = vec![false; rows];
        let mut used_c = vec![false; cols];
        for &(r, k) in &pairs {
            prop_assert!(!used_r[r] && !used_c[k]);
            used_r[r] = true;
            used_c[k] = true;
        }
        // brute force over injective maps from the smaller side
        fn best(c: &[Vec<f64>], r: usize, used: &mut Vec<bool>, left: usize) -> f64 {
            if left == 0 { return 0.0; }
            if r == c.len() { return f64::INFINITY; }
            let mut b = best(c, r + 1, used, left); // skip row
            for k in 0..used.len() {
                if !used[k] {
                    used[k] = true;
                    b = b.min(c[r][k] + best(c, r + 1, used, left - 1));
                    used[k] = false;
                }
            }
            b
        }
        let want = best(&c, 0, &mut vec![false; cols], rows.min(cols));
        prop_assert!((cost - want).abs() < 1e-9);
    }

    #[test]
    fn general_matching_matches_enumeration(
        n in 2usize..=7,
        raw in prop::collection::vec((0usize..7, 0usize..7, -2i32..10), 0..12),
    ) {
        let edges: Vec<(usize, usize, f64)> = raw
            .iter()
            .filter(|(a, b, _)| a < &n && b < &n && a != b)
            .map(|&(a, b, w)| (a, b, w as f64))
            .collect();
        let chosen = max_weight_general_matching(n, &edges);
        let mut seen = vec![false; n];
        for &e in &chosen {
            let (a, b, _) = edges[e];
            prop_assert!(!seen[a] && !seen[b]);
            seen[a] = true;
            seen[b] = true;
        }
        let mut best = 0.0f64;
        for mask in 0u32..(1 << edges.len()) {
            let mut used = vec![false; n];
            let mut ok = true;
            let mut w = 0.0;
            for (e, &(a, b, we)) in edges.iter().enumerate() {
                if mask >> e & 1 == 1 {
                    if used[a] || used[b] { ok = false; break; }
                    used[a] = true;
                    used[b] = true;
                    w += we;
                }
            }
            if ok { best = best.max(w); }
        }
        prop_assert!((matching_weight(&edges, &chosen) - best).abs() < 1e-9);
    }
}
