//! Minimal dense LP backend: two-phase simplex with Bland's rule over f64
//! tableaus. Built for desk-scale models (hundreds of columns); every
//! optimal answer is self-checked for primal feasibility and duality gap,
//! and any numerical doubt is surfaced as an explicit failure status.

use crate::error::CoreError;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct LpRow {
    pub coeffs: Vec<(usize, f64)>,
    pub cmp: Cmp,
    pub rhs: f64,
}

/// Minimization model over nonnegative variables with optional upper
/// bounds. Upper bounds are kept apart from functional rows so dual values
/// line up with the rows the caller added.
#[derive(Debug, Clone)]
pub struct LpModel {
    pub n: usize,
    pub objective: Vec<f64>,
    pub rows: Vec<LpRow>,
    pub upper: Vec<Option<f64>>,
}

impl LpModel {
    pub fn new(n: usize) -> Self {
        LpModel { n, objective: vec![0.0; n], rows: Vec::new(), upper: vec![None; n] }
    }

    pub fn set_objective(&mut self, var: usize, coeff: f64) {
        assert!(var < self.n && coeff.is_finite());
        self.objective[var] = coeff;
    }

    pub fn set_upper(&mut self, var: usize, hi: f64) {
        assert!(var < self.n && hi.is_finite() && hi >= 0.0);
        self.upper[var] = Some(hi);
    }

    /// Add a functional row; duplicate indices are merged by summation.
    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, cmp: Cmp, rhs: f64) {
        assert!(rhs.is_finite());
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(coeffs.len());
        for (j, v) in coeffs {
            assert!(j < self.n && v.is_finite());
            match merged.iter_mut().find(|(k, _)| *k == j) {
                Some((_, acc)) => *acc += v,
                None => merged.push((j, v)),
            }
        }
        self.rows.push(LpRow { coeffs: merged, cmp, rhs });
    }

    /// Plain-text dump in an LP-format-like syntax, for debugging.
    pub fn dump_lp_text(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::from("Minimize\n obj:");
        for (j, &c) in self.objective.iter().enumerate() {
            if c != 0.0 {
                let _ = write!(out, " {}{} x{}", if c >= 0.0 { "+" } else { "-" }, c.abs(), j);
            }
        }
        out.push_str("\nSubject To\n");
        for (r, row) in self.rows.iter().enumerate() {
            let _ = write!(out, " r{}:", r);
            for &(j, v) in &row.coeffs {
                let _ = write!(out, " {}{} x{}", if v >= 0.0 { "+" } else { "-" }, v.abs(), j);
            }
            let sense = match row.cmp {
                Cmp::Le => "<=",
                Cmp::Ge => ">=",
                Cmp::Eq => "=",
            };
            let _ = writeln!(out, " {} {}", sense, row.rhs);
        }
        out.push_str("Bounds\n");
        for (j, up) in self.upper.iter().enumerate() {
            match up {
                Some(u) => {
                    let _ = writeln!(out, " 0 <= x{} <= {}", j, u);
                }
                None => {
                    let _ = writeln!(out, " 0 <= x{}", j);
                }
            }
        }
        out.push_str("End\n");
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    SolverFailure,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Structural variable values (empty unless optimal).
    pub x: Vec<f64>,
    /// One dual per functional row, in the caller's sign convention
    /// (empty unless optimal). Upper-bound rows are excluded.
    pub duals: Vec<f64>,
    pub objective: f64,
    pub message: Option<String>,
}

impl LpSolution {
    fn abnormal(status: LpStatus, message: impl Into<String>) -> Self {
        LpSolution { status, x: Vec::new(), duals: Vec::new(), objective: f64::NAN, message: Some(message.into()) }
    }
}

const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;

struct Tableau {
    /// Active rows (redundant rows get dropped after phase 1).
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    basis: Vec<usize>,
    /// Active row → original internal row index.
    orig: Vec<usize>,
    art0: usize,
    ncols: usize,
}

impl Tableau {
    fn reduced_cost(&self, costs: &[f64], j: usize) -> f64 {
        let mut rc = costs[j];
        for (r, row) in self.a.iter().enumerate() {
            let cb = costs[self.basis[r]];
            if cb != 0.0 {
                rc -= cb * row[j];
            }
        }
        rc
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let piv = self.a[r][j];
        let inv = 1.0 / piv;
        for v in self.a[r].iter_mut() {
            *v *= inv;
        }
        self.b[r] *= inv;
        // Snapshot the pivot row to eliminate it from the others.
        let prow = self.a[r].clone();
        let pb = self.b[r];
        for (i, row) in self.a.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let factor = row[j];
            if factor != 0.0 {
                for (v, &p) in row.iter_mut().zip(&prow) {
                    *v -= factor * p;
                }
                row[j] = 0.0;
                self.b[i] -= factor * pb;
            }
        }
        self.basis[r] = j;
    }

    /// One simplex phase with Bland's rule. `ban_artificials` blocks the
    /// artificial columns from entering. Returns Ok(true) at optimality,
    /// Ok(false) when unbounded.
    fn run(&mut self, costs: &[f64], ban_artificials: bool) -> Result<bool, CoreError> {
        let max_iters = 50_000 + 200 * (self.a.len() + self.ncols);
        for _ in 0..max_iters {
            // Bland: lowest-index improving column.
            let mut entering = None;
            for j in 0..self.ncols {
                if ban_artificials && j >= self.art0 {
                    break;
                }
                if self.basis.contains(&j) {
                    continue;
                }
                if self.reduced_cost(costs, j) < -PIVOT_TOL {
                    entering = Some(j);
                    break;
                }
            }
            let j = match entering {
                Some(j) => j,
                None => return Ok(true),
            };
            // Ratio test; ties broken by lowest basis index (Bland).
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.a.len() {
                let coef = self.a[r][j];
                if coef > PIVOT_TOL {
                    let ratio = self.b[r] / coef;
                    let better = match leave {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio - PIVOT_TOL
                                || (ratio < lratio + PIVOT_TOL && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, j),
                None => return Ok(false),
            }
        }
        Err(CoreError::SolverFailure("simplex iteration cap exceeded".into()))
    }
}

/// Solve a model to optimality or a correct infeasible/unbounded verdict.
/// A failed internal self-check (feasibility residuals, duality gap) comes
/// back as `SolverFailure`, never as a silently wrong answer.
pub fn solve_lp(model: &LpModel) -> Result<LpSolution, CoreError> {
    for &c in &model.objective {
        if !c.is_finite() {
            return Err(CoreError::Domain("non-finite objective coefficient".into()));
        }
    }

    // Internal row list: functional rows first, then upper bounds.
    struct IRow {
        coeffs: Vec<(usize, f64)>,
        cmp: Cmp,
        rhs: f64,
        sign: f64,
    }
    let mut irows: Vec<IRow> = Vec::new();
    for row in &model.rows {
        irows.push(IRow { coeffs: row.coeffs.clone(), cmp: row.cmp, rhs: row.rhs, sign: 1.0 });
    }
    for (j, up) in model.upper.iter().enumerate() {
        if let Some(u) = up {
            irows.push(IRow { coeffs: vec![(j, 1.0)], cmp: Cmp::Le, rhs: *u, sign: 1.0 });
        }
    }
    // Flip rows so all right-hand sides are nonnegative.
    for row in irows.iter_mut() {
        if row.rhs < 0.0 {
            row.rhs = -row.rhs;
            row.sign = -1.0;
            for (_, v) in row.coeffs.iter_mut() {
                *v = -*v;
            }
            row.cmp = match row.cmp {
                Cmp::Le => Cmp::Ge,
                Cmp::Ge => Cmp::Le,
                Cmp::Eq => Cmp::Eq,
            };
        }
    }

    let m = irows.len();
    let n = model.n;
    let n_slack = irows.iter().filter(|r| r.cmp != Cmp::Eq).count();
    let art0 = n + n_slack;
    let ncols = art0 + m;

    let mut tab = Tableau {
        a: vec![vec![0.0; ncols]; m],
        b: vec![0.0; m],
        basis: vec![0; m],
        orig: (0..m).collect(),
        art0,
        ncols,
    };
    let mut slack_idx = n;
    for (r, row) in irows.iter().enumerate() {
        for &(j, v) in &row.coeffs {
            tab.a[r][j] += v;
        }
        match row.cmp {
            Cmp::Le => {
                tab.a[r][slack_idx] = 1.0;
                slack_idx += 1;
            }
            Cmp::Ge => {
                tab.a[r][slack_idx] = -1.0;
                slack_idx += 1;
            }
            Cmp::Eq => {}
        }
        tab.a[r][art0 + r] = 1.0;
        tab.b[r] = row.rhs;
        tab.basis[r] = art0 + r;
    }

    // Phase 1: minimize the sum of artificials.
    let mut phase1 = vec![0.0; ncols];
    for j in art0..ncols {
        phase1[j] = 1.0;
    }
    if !tab.run(&phase1, false)? {
        return Ok(LpSolution::abnormal(LpStatus::SolverFailure, "phase 1 unbounded"));
    }
    let art_sum: f64 = (0..tab.a.len()).filter(|&r| tab.basis[r] >= art0).map(|r| tab.b[r]).sum();
    let b_scale = irows.iter().map(|r| r.rhs.abs()).fold(1.0, f64::max);
    if art_sum > FEAS_TOL * b_scale {
        return Ok(LpSolution::abnormal(LpStatus::Infeasible, format!("phase-1 residual {}", art_sum)));
    }

    // Drive leftover artificials out of the basis; rows that cannot be
    // pivoted out are linearly dependent and get dropped.
    let mut r = 0;
    while r < tab.a.len() {
        if tab.basis[r] >= art0 {
            let col = (0..art0).find(|&j| tab.a[r][j].abs() > FEAS_TOL);
            match col {
                Some(j) => tab.pivot(r, j),
                None => {
                    tab.a.remove(r);
                    tab.b.remove(r);
                    tab.basis.remove(r);
                    tab.orig.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }

    // Phase 2 over the real objective; artificials banned from entering.
    let mut phase2 = vec![0.0; ncols];
    phase2[..n].copy_from_slice(&model.objective);
    if !tab.run(&phase2, true)? {
        return Ok(LpSolution::abnormal(LpStatus::Unbounded, "phase 2 unbounded"));
    }

    let mut x = vec![0.0; n];
    for (r, &bv) in tab.basis.iter().zip(&tab.b) {
        if *r < n {
            x[*r] = bv.max(0.0);
        }
    }
    let objective: f64 = model.objective.iter().zip(&x).map(|(c, v)| c * v).sum();

    // Duals from the artificial columns: y_r = −rc(a_r) under phase-2
    // costs; deleted redundant rows carry dual 0 (their artificial column
    // is all-zero by then so the formula agrees).
    let mut internal_duals = vec![0.0; m];
    for (r, yd) in internal_duals.iter_mut().enumerate() {
        *yd = -tab.reduced_cost(&phase2, art0 + r);
    }

    // Self-check 1: primal residuals, scaled by row magnitude.
    for (r, row) in irows.iter().enumerate() {
        let lhs: f64 = row.coeffs.iter().map(|&(j, v)| v * x[j]).sum();
        let scale = row.coeffs.iter().map(|&(_, v)| v.abs()).sum::<f64>().max(row.rhs.abs()).max(1.0);
        let viol = match row.cmp {
            Cmp::Le => lhs - row.rhs,
            Cmp::Ge => row.rhs - lhs,
            Cmp::Eq => (lhs - row.rhs).abs(),
        };
        if viol / scale > 1e-9 {
            return Ok(LpSolution::abnormal(
                LpStatus::SolverFailure,
                format!("row {} residual {:.3e} after scaling", r, viol / scale),
            ));
        }
    }
    // Self-check 2: duality gap.
    let dual_obj: f64 = internal_duals.iter().zip(&irows).map(|(y, row)| y * row.rhs).sum();
    if (dual_obj - objective).abs() > 1e-6 * objective.abs().max(1.0) {
        return Ok(LpSolution::abnormal(
            LpStatus::SolverFailure,
            format!("duality gap {:.3e}", dual_obj - objective),
        ));
    }

    let duals = irows[..model.rows.len()]
        .iter()
        .enumerate()
        .map(|(r, row)| row.sign * internal_duals[r])
        .collect();
    Ok(LpSolution { status: LpStatus::Optimal, x, duals, objective, message: None })
}

#[cfg(test)]
pub(crate) fn enumerate_vertices_opt(model: &LpModel) -> Option<f64> {
    // Brute-force oracle: try every choice of n tight constraints among
    // {functional rows as equalities, x_j = 0, x_j = upper_j}, solve the
    // square system, keep feasible points. Only for tiny models.
    let n = model.n;
    #[derive(Clone)]
    enum Tight {
        Row(usize),
        AtZero(usize),
        AtUpper(usize),
    }
    let mut cands: Vec<Tight> = Vec::new();
    for r in 0..model.rows.len() {
        cands.push(Tight::Row(r));
    }
    for j in 0..n {
        cands.push(Tight::AtZero(j));
        if model.upper[j].is_some() {
            cands.push(Tight::AtUpper(j));
        }
    }
    let mut best: Option<f64> = None;
    let mut choice = vec![0usize; n];
    fn rec(
        model: &LpModel,
        cands: &[Tight],
        choice: &mut Vec<usize>,
        depth: usize,
        start: usize,
        best: &mut Option<f64>,
    ) {
        let n = model.n;
        if depth == n {
            // Build and solve the linear system.
            let mut a = vec![vec![0.0; n]; n];
            let mut b = vec![0.0; n];
            for (i, &ci) in choice.iter().enumerate() {
                match cands[ci] {
                    Tight::Row(r) => {
                        for &(j, v) in &model.rows[r].coeffs {
                            a[i][j] = v;
                        }
                        b[i] = model.rows[r].rhs;
                    }
                    Tight::AtZero(j) => {
                        a[i][j] = 1.0;
                        b[i] = 0.0;
                    }
                    Tight::AtUpper(j) => {
                        a[i][j] = 1.0;
                        b[i] = model.upper[j].unwrap();
                    }
                }
            }
            // Gaussian elimination with partial pivoting.
            for col in 0..n {
                let piv = (col..n).max_by(|&p, &q| a[p][col].abs().partial_cmp(&a[q][col].abs()).unwrap());
                let piv = piv.unwrap();
                if a[piv][col].abs() < 1e-9 {
                    return; // singular choice
                }
                a.swap(col, piv);
                b.swap(col, piv);
                for row in col + 1..n {
                    let f = a[row][col] / a[col][col];
                    if f != 0.0 {
                        for k in col..n {
                            a[row][k] -= f * a[col][k];
                        }
                        b[row] -= f * b[col];
                    }
                }
            }
            let mut x = vec![0.0; n];
            for col in (0..n).rev() {
                let mut acc = b[col];
                for k in col + 1..n {
                    acc -= a[col][k] * x[k];
                }
                x[col] = acc / a[col][col];
            }
            // Feasibility.
            for (j, &v) in x.iter().enumerate() {
                if v < -1e-7 {
                    return;
                }
                if let Some(u) = model.upper[j] {
                    if v > u + 1e-7 {
                        return;
                    }
                }
            }
            for row in &model.rows {
                let lhs: f64 = row.coeffs.iter().map(|&(j, v)| v * x[j]).sum();
                let ok = match row.cmp {
                    Cmp::Le => lhs <= row.rhs + 1e-7,
                    Cmp::Ge => lhs >= row.rhs - 1e-7,
                    Cmp::Eq => (lhs - row.rhs).abs() <= 1e-7,
                };
                if !ok {
                    return;
                }
            }
            let obj: f64 = model.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
            if best.map_or(true, |b| obj < b) {
                *best = Some(obj);
            }
            return;
        }
        for c in start..cands.len() {
            choice[depth] = c;
            rec(model, cands, choice, depth + 1, c + 1, best);
        }
    }
    rec(model, &cands, &mut choice, 0, 0, &mut best);
    best
}
