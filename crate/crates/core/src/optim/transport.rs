//! Unit-supply transportation by successive shortest augmenting paths.

/// Minimum-cost assignment of `min(rows, cols)` units where every row
/// (vehicle) supplies one unit and every column (request) absorbs one.
/// Non-finite costs mark forbidden pairs; if they prevent a full shipment the
/// largest feasible one is returned. Output pairs are sorted by row.
pub fn transportation_solve(costs: &[Vec<f64>]) -> (Vec<(usize, usize)>, f64) {
    let rows = costs.len();
    let cols = costs.first().map_or(0, |c| c.len());
    let target = rows.min(cols);
    let mut row_match: Vec<Option<usize>> = vec![None; rows];
    let mut col_match: Vec<Option<usize>> = vec![None; cols];

    // Node layout: rows 0..rows, columns rows..rows+cols.
    for _ in 0..target {
        // Bellman-Ford from all free rows over the residual graph.
        let total = rows + cols;
        let mut dist = vec![f64::INFINITY; total];
        let mut prev: Vec<Option<usize>> = vec![None; total];
        for r in 0..rows {
            if row_match[r].is_none() {
                dist[r] = 0.0;
            }
        }
        for _ in 0..total {
            let mut changed = false;
            for r in 0..rows {
                if !dist[r].is_finite() {
                    continue;
                }
                for c in 0..cols {
                    let w = costs[r][c];
                    if !w.is_finite() || row_match[r] == Some(c) {
                        continue;
                    }
                    let nd = dist[r] + w;
                    if nd < dist[rows + c] - 1e-12 {
                        dist[rows + c] = nd;
                        prev[rows + c] = Some(r);
                        changed = true;
                    }
                }
            }
            for c in 0..cols {
                if let Some(r) = col_match[c] {
                    if dist[rows + c].is_finite() {
                        let nd = dist[rows + c] - costs[r][c];
                        if nd < dist[r] - 1e-12 {
                            dist[r] = nd;
                            prev[r] = Some(rows + c);
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let end = (0..cols)
            .filter(|&c| col_match[c].is_none() && dist[rows + c].is_finite())
            .min_by(|&a, &b| dist[rows + a].total_cmp(&dist[rows + b]).then(a.cmp(&b)));
        let Some(c_end) = end else { break };
        let mut node = rows + c_end;
        while let Some(r) = prev[node] {
            let c = node - rows;
            col_match[c] = Some(r);
            let old = row_match[r].replace(c);
            match old {
                Some(_) => node = prev[r].expect("matched row reached via its column"),
                None => break,
            }
        }
    }
    let mut pairs: Vec<(usize, usize)> = row_match
        .iter()
        .enumerate()
        .filter_map(|(r, c)| c.map(|c| (r, c)))
        .collect();
    pairs.sort();
    let cost = pairs.iter().map(|&(r, c)| costs[r][c]).sum();
    (pairs, cost)
}
