//! Dense two-phase tableau simplex with dual extraction.

use super::OptimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub cmp: Cmp,
    pub rhs: f64,
}

/// `opt c·x  s.t.  rows,  0 ≤ x ≤ upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    /// `f64::INFINITY` when unbounded above.
    pub upper: Vec<f64>,
    pub names: Vec<String>,
}

impl LpProblem {
    pub fn new(sense: Sense) -> Self {
        LpProblem {
            sense,
            objective: Vec::new(),
            rows: Vec::new(),
            upper: Vec::new(),
            names: Vec::new(),
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, cost: f64, upper: f64) -> usize {
        self.objective.push(cost);
        self.upper.push(upper);
        self.names.push(name.into());
        self.objective.len() - 1
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, cmp: Cmp, rhs: f64) -> usize {
        self.rows.push(Row { coeffs, cmp, rhs });
        self.rows.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn validate(&self) -> Result<(), OptimError> {
        let n = self.num_vars();
        if self.upper.len() != n || self.names.len() != n {
            return Err(OptimError::Dimension);
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(OptimError::NonFinite);
        }
        if self.upper.iter().any(|u| u.is_nan() || *u < 0.0) {
            return Err(OptimError::NonFinite);
        }
        for row in &self.rows {
            if !row.rhs.is_finite() {
                return Err(OptimError::NonFinite);
            }
            for &(j, a) in &row.coeffs {
                if j >= n {
                    return Err(OptimError::Dimension);
                }
                if !a.is_finite() {
                    return Err(OptimError::NonFinite);
                }
            }
        }
        Ok(())
    }

    /// Objective value of `x`.
    pub fn value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of rows and bounds by `x`.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for row in &self.rows {
            let lhs: f64 = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let v = match row.cmp {
                Cmp::Le => lhs - row.rhs,
                Cmp::Ge => row.rhs - lhs,
                Cmp::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(-v).max(v - self.upper[j]);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Sensitivity of the optimal objective to each row's right-hand side.
    pub duals: Vec<f64>,
    /// Same for each finite upper bound (zero when the bound is slack or
    /// implied by a row).
    pub bound_duals: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpOptions {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    pub max_iterations: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            feasibility_tol: 1e-7,
            optimality_tol: 1e-9,
            pivot_tol: 1e-9,
            max_iterations: 1_000_000,
            bland_after: 50,
        }
    }
}

pub fn simplex_solve(p: &LpProblem) -> LpSolution {
    simplex_solve_with(p, &LpOptions::default())
}

struct Tableau {
    a: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    d: Vec<f64>,
    basis: Vec<usize>,
    artificial: Vec<bool>,
    iterations: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
    IterationLimit,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let inv = 1.0 / self.a[r][c];
        let nz: Vec<usize> = {
            let row = &mut self.a[r];
            for v in row.iter_mut() {
                *v *= inv;
            }
            row[c] = 1.0;
            (0..row.len()).filter(|&j| row[j] != 0.0).collect()
        };
        self.rhs[r] *= inv;
        let pivot_row = self.a[r].clone();
        let pivot_rhs = self.rhs[r];
        for i in 0..self.a.len() {
            if i == r {
                continue;
            }
            let f = self.a[i][c];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.a[i];
            for &j in &nz {
                row[j] -= f * pivot_row[j];
            }
            row[c] = 0.0;
            self.rhs[i] -= f * pivot_rhs;
            if self.rhs[i].abs() < 1e-13 {
                self.rhs[i] = 0.0;
            }
        }
        let f = self.d[c];
        if f != 0.0 {
            for &j in &nz {
                self.d[j] -= f * pivot_row[j];
            }
            self.d[c] = 0.0;
        }
        self.basis[r] = c;
        self.iterations += 1;
    }

    fn reset_costs(&mut self, costs: &[f64]) {
        self.d = costs.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = costs[b];
            if cb != 0.0 {
                for (dj, aij) in self.d.iter_mut().zip(&self.a[i]) {
                    *dj -= cb * aij;
                }
            }
        }
    }

    fn run(&mut self, opts: &LpOptions, allow_artificial: bool, limit: usize) -> Outcome {
        let mut degenerate = 0usize;
        loop {
            if self.iterations >= limit {
                return Outcome::IterationLimit;
            }
            let bland = degenerate >= opts.bland_after;
            let mut enter: Option<usize> = None;
            let mut best = -opts.optimality_tol;
            for (j, &dj) in self.d.iter().enumerate() {
                if !allow_artificial && self.artificial[j] {
                    continue;
                }
                if dj < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = dj;
                }
            }
            let Some(c) = enter else {
                return Outcome::Optimal;
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.a.len() {
                let aic = self.a[i][c];
                if aic > opts.pivot_tol {
                    let ratio = self.rhs[i].max(0.0) / aic;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((k, best_ratio)) => {
                            if ratio < best_ratio - 1e-12
                                || (ratio <= best_ratio + 1e-12 && self.basis[i] < self.basis[k])
                            {
                                Some((i, ratio))
                            } else {
                                Some((k, best_ratio))
                            }
                        }
                    };
                }
            }
            let Some((r, ratio)) = leave else {
                return Outcome::Unbounded;
            };
            if ratio <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, c);
        }
    }
}

pub fn simplex_solve_with(p: &LpProblem, opts: &LpOptions) -> LpSolution {
    let n = p.num_vars();
    let sign = match p.sense {
        Sense::Min => 1.0,
        Sense::Max => -1.0,
    };

    // Upper bounds implied by a nonnegative row are not added explicitly.
    let mut implied = vec![f64::INFINITY; n];
    for row in &p.rows {
        if row.cmp == Cmp::Ge || row.coeffs.iter().any(|&(_, a)| a < 0.0) {
            continue;
        }
        for &(j, a) in &row.coeffs {
            if a > 0.0 {
                implied[j] = implied[j].min(row.rhs / a);
            }
        }
    }
    struct Built {
        coeffs: Vec<(usize, f64)>,
        cmp: Cmp,
        rhs: f64,
        flip: f64,
    }
    let mut built: Vec<Built> = Vec::new();
    let mut source: Vec<Option<usize>> = Vec::new(); // None: bound row
    let mut bound_row: Vec<Option<usize>> = vec![None; n];
    for row in &p.rows {
        built.push(Built {
            coeffs: row.coeffs.clone(),
            cmp: row.cmp,
            rhs: row.rhs,
            flip: 1.0,
        });
        source.push(Some(built.len() - 1));
    }
    for j in 0..n {
        if p.upper[j].is_finite() && implied[j] > p.upper[j] + 1e-12 {
            bound_row[j] = Some(built.len());
            built.push(Built {
                coeffs: vec![(j, 1.0)],
                cmp: Cmp::Le,
                rhs: p.upper[j],
                flip: 1.0,
            });
            source.push(None);
        }
    }
    for b in built.iter_mut() {
        if b.rhs < 0.0 {
            b.rhs = -b.rhs;
            b.flip = -1.0;
            for c in b.coeffs.iter_mut() {
                c.1 = -c.1;
            }
            b.cmp = match b.cmp {
                Cmp::Le => Cmp::Ge,
                Cmp::Ge => Cmp::Le,
                Cmp::Eq => Cmp::Eq,
            };
        }
    }
    let m = built.len();
    let n_surplus = built.iter().filter(|b| b.cmp == Cmp::Ge).count();
    let ncols = n + m + n_surplus;
    let mut a = vec![vec![0.0; ncols]; m];
    let mut artificial = vec![false; ncols];
    let mut surplus_col = n + m;
    for (i, b) in built.iter().enumerate() {
        for &(j, v) in &b.coeffs {
            a[i][j] += v;
        }
        a[i][n + i] = 1.0;
        match b.cmp {
            Cmp::Le => {}
            Cmp::Ge => {
                artificial[n + i] = true;
                a[i][surplus_col] = -1.0;
                surplus_col += 1;
            }
            Cmp::Eq => artificial[n + i] = true,
        }
    }
    let mut t = Tableau {
        a,
        rhs: built.iter().map(|b| b.rhs).collect(),
        d: vec![0.0; ncols],
        basis: (0..m).map(|i| n + i).collect(),
        artificial,
        iterations: 0,
    };
    let limit = opts.max_iterations;

    let fail = |status: LpStatus, iterations: usize| LpSolution {
        status,
        x: vec![0.0; n],
        objective: f64::NAN,
        duals: vec![0.0; p.rows.len()],
        bound_duals: vec![0.0; n],
        iterations,
    };

    if t.artificial.iter().any(|&x| x) {
        let phase1: Vec<f64> = t.artificial.iter().map(|&x| if x { 1.0 } else { 0.0 }).collect();
        t.reset_costs(&phase1);
        match t.run(opts, true, limit) {
            Outcome::Optimal => {}
            Outcome::Unbounded => return fail(LpStatus::Infeasible, t.iterations),
            Outcome::IterationLimit => return fail(LpStatus::IterationLimit, t.iterations),
        }
        let scale = 1.0 + t.rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let infeas: f64 = (0..m)
            .filter(|&i| t.artificial[t.basis[i]])
            .map(|i| t.rhs[i])
            .sum();
        if infeas > opts.feasibility_tol * scale {
            return fail(LpStatus::Infeasible, t.iterations);
        }
        for r in 0..m {
            if t.artificial[t.basis[r]] {
                if let Some(c) = (0..ncols).find(|&j| !t.artificial[j] && t.a[r][j].abs() > 1e-9) {
                    t.pivot(r, c);
                }
            }
        }
    }

    let mut costs = vec![0.0; ncols];
    for j in 0..n {
        costs[j] = sign * p.objective[j];
    }
    t.reset_costs(&costs);
    match t.run(opts, false, limit) {
        Outcome::Optimal => {}
        Outcome::Unbounded => return fail(LpStatus::Unbounded, t.iterations),
        Outcome::IterationLimit => return fail(LpStatus::IterationLimit, t.iterations),
    }

    let mut x = vec![0.0; n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rhs[i].max(0.0);
        }
    }
    let mut duals = vec![0.0; p.rows.len()];
    let mut bound_duals = vec![0.0; n];
    for i in 0..m {
        let y = -t.d[n + i] * built[i].flip * sign;
        match source[i] {
            Some(k) => duals[k] = y,
            None => {
                let j = built[i].coeffs[0].0;
                debug_assert_eq!(bound_row[j], Some(i));
                bound_duals[j] = y;
            }
        }
    }
    LpSolution {
        status: LpStatus::Optimal,
        objective: p.value(&x),
        x,
        duals,
        bound_duals,
        iterations: t.iterations,
    }
}
