//! Dense two-phase simplex for the small linear programs behind the
//! projection oracles. Minimization form; constraints may mix `<=`, `=`,
//! `>=`; per-variable box bounds, infinities allowed.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rel {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Feasible,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpResult {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone)]
struct Row {
    coeffs: Vec<(usize, f64)>,
    rel: Rel,
    rhs: f64,
}

/// A linear program under construction. Feasibility mode when no objective is
/// set: `solve` then returns `Feasible`/`Infeasible` with some feasible point.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    n: usize,
    objective: Option<Vec<f64>>,
    rows: Vec<Row>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

const EPS: f64 = 1e-9;
/// Residual tolerance on returned points.
pub const FEAS_TOL: f64 = 1e-7;

impl LinearProgram {
    /// `n` variables, default bounds `x >= 0`.
    pub fn new(n: usize) -> Self {
        LinearProgram {
            n,
            objective: None,
            rows: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    /// Minimize `c . x`.
    pub fn minimize(&mut self, c: Vec<f64>) -> &mut Self {
        assert_eq!(c.len(), self.n);
        self.objective = Some(c);
        self
    }

    pub fn bounds(&mut self, i: usize, lo: f64, hi: f64) -> &mut Self {
        assert!(lo <= hi + EPS, "bad bounds on x{i}: [{lo}, {hi}]");
        self.lower[i] = lo;
        self.upper[i] = hi;
        self
    }

    pub fn free(&mut self, i: usize) -> &mut Self {
        self.bounds(i, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn constrain(&mut self, coeffs: &[(usize, f64)], rel: Rel, rhs: f64) -> &mut Self {
        debug_assert!(coeffs.iter().all(|&(i, _)| i < self.n));
        self.rows.push(Row { coeffs: coeffs.to_vec(), rel, rhs });
        self
    }

    pub fn le(&mut self, coeffs: &[(usize, f64)], rhs: f64) -> &mut Self {
        self.constrain(coeffs, Rel::Le, rhs)
    }

    pub fn ge(&mut self, coeffs: &[(usize, f64)], rhs: f64) -> &mut Self {
        self.constrain(coeffs, Rel::Ge, rhs)
    }

    pub fn eq(&mut self, coeffs: &[(usize, f64)], rhs: f64) -> &mut Self {
        self.constrain(coeffs, Rel::Eq, rhs)
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// CPLEX-LP-like textual dump for debugging.
    pub fn to_lp_text(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        match &self.objective {
            Some(c) => {
                s.push_str("Minimize\n obj:");
                for (i, v) in c.iter().enumerate() {
                    if *v != 0.0 {
                        let _ = write!(s, " {v:+} x{i}");
                    }
                }
                s.push('\n');
            }
            None => s.push_str("Minimize\n obj: 0\n"),
        }
        s.push_str("Subject To\n");
        for (k, r) in self.rows.iter().enumerate() {
            let _ = write!(s, " c{k}:");
            for &(i, v) in &r.coeffs {
                let _ = write!(s, " {v:+} x{i}");
            }
            let op = match r.rel {
                Rel::Le => "<=",
                Rel::Eq => "=",
                Rel::Ge => ">=",
            };
            let _ = writeln!(s, " {op} {}", r.rhs);
        }
        s.push_str("Bounds\n");
        for i in 0..self.n {
            let _ = writeln!(s, " {} <= x{i} <= {}", self.lower[i], self.upper[i]);
        }
        s.push_str("End\n");
        s
    }

    /// Solves the program. Status `Optimal` when an objective is set,
    /// `Feasible` in feasibility mode.
    pub fn solve(&self) -> Result<LpResult> {
        // Substitution per variable: x_i = shift_i + sign_i * y_a (+ optionally - y_b
        // for free variables), all y >= 0. Finite upper bounds after substitution
        // become explicit rows.
        #[derive(Clone, Copy)]
        enum Subst {
            // x = lo + y
            Shifted { col: usize, lo: f64 },
            // x = hi - y
            Negated { col: usize, hi: f64 },
            // x = y_pos - y_neg
            Split { pos: usize, neg: usize },
        }

        let mut substs = Vec::with_capacity(self.n);
        let mut ncols = 0usize;
        for i in 0..self.n {
            let (lo, hi) = (self.lower[i], self.upper[i]);
            if lo.is_finite() {
                substs.push(Subst::Shifted { col: ncols, lo });
                ncols += 1;
            } else if hi.is_finite() {
                substs.push(Subst::Negated { col: ncols, hi });
                ncols += 1;
            } else {
                substs.push(Subst::Split { pos: ncols, neg: ncols + 1 });
                ncols += 2;
            }
        }

        // Dense rows over the substituted variables.
        let mut dense_rows: Vec<(Vec<f64>, Rel, f64)> = Vec::with_capacity(self.rows.len());
        let mut expand = |coeffs: &[(usize, f64)], rhs: f64| -> (Vec<f64>, f64) {
            let mut row = vec![0.0; ncols];
            let mut b = rhs;
            for &(i, v) in coeffs {
                match substs[i] {
                    Subst::Shifted { col, lo } => {
                        row[col] += v;
                        b -= v * lo;
                    }
                    Subst::Negated { col, hi } => {
                        row[col] -= v;
                        b -= v * hi;
                    }
                    Subst::Split { pos, neg } => {
                        row[pos] += v;
                        row[neg] -= v;
                    }
                }
            }
            (row, b)
        };
        for r in &self.rows {
            let (row, b) = expand(&r.coeffs, r.rhs);
            dense_rows.push((row, r.rel, b));
        }
        // bounded-above shifted variables: y <= hi - lo
        for i in 0..self.n {
            if let Subst::Shifted { col, lo } = substs[i] {
                let hi = self.upper[i];
                if hi.is_finite() {
                    let mut row = vec![0.0; ncols];
                    row[col] = 1.0;
                    dense_rows.push((row, Rel::Le, hi - lo));
                }
            }
        }

        // objective over substituted vars (constant offset tracked separately)
        let mut obj = vec![0.0; ncols];
        let mut obj_off = 0.0;
        if let Some(c) = &self.objective {
            for (i, &v) in c.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                match substs[i] {
                    Subst::Shifted { col, lo } => {
                        obj[col] += v;
                        obj_off += v * lo;
                    }
                    Subst::Negated { col, hi } => {
                        obj[col] -= v;
                        obj_off += v * hi;
                    }
                    Subst::Split { pos, neg } => {
                        obj[pos] += v;
                        obj[neg] -= v;
                    }
                }
            }
        }

        let y = simplex(ncols, &mut dense_rows, &obj)?;
        let (status, y) = match y {
            SimplexOutcome::Solved(v) => {
                (if self.objective.is_some() { LpStatus::Optimal } else { LpStatus::Feasible }, v)
            }
            SimplexOutcome::Infeasible => {
                return Ok(LpResult {
                    status: LpStatus::Infeasible,
                    x: vec![],
                    objective: f64::NAN,
                })
            }
            SimplexOutcome::Unbounded => {
                return Ok(LpResult {
                    status: LpStatus::Unbounded,
                    x: vec![],
                    objective: f64::NEG_INFINITY,
                })
            }
        };

        let mut x = vec![0.0; self.n];
        for i in 0..self.n {
            x[i] = match substs[i] {
                Subst::Shifted { col, lo } => lo + y[col],
                Subst::Negated { col, hi } => hi - y[col],
                Subst::Split { pos, neg } => y[pos] - y[neg],
            };
        }
        let objective = self
            .objective
            .as_ref()
            .map(|c| c.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>())
            .unwrap_or(0.0);
        let _ = obj_off;
        Ok(LpResult { status, x, objective })
    }

    /// Max constraint violation of a point (for tests and certificates).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for r in &self.rows {
            let lhs: f64 = r.coeffs.iter().map(|&(i, v)| v * x[i]).sum();
            let viol = match r.rel {
                Rel::Le => lhs - r.rhs,
                Rel::Ge => r.rhs - lhs,
                Rel::Eq => (lhs - r.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        for i in 0..self.n {
            worst = worst.max(self.lower[i] - x[i]).max(x[i] - self.upper[i]);
        }
        worst
    }
}

enum SimplexOutcome {
    Solved(Vec<f64>),
    Infeasible,
    Unbounded,
}

/// Two-phase primal simplex on the standard-form problem
/// `min c.y  s.t.  rows, y >= 0`. Dantzig pricing with a permanent switch to
/// Bland's rule once the iteration count suggests cycling; hard pivot cap.
fn simplex(
    ncols: usize,
    rows: &mut Vec<(Vec<f64>, Rel, f64)>,
    obj: &[f64],
) -> Result<SimplexOutcome> {
    let m = rows.len();
    // normalize rhs >= 0
    for (row, rel, b) in rows.iter_mut() {
        if *b < 0.0 {
            for v in row.iter_mut() {
                *v = -*v;
            }
            *b = -*b;
            *rel = match *rel {
                Rel::Le => Rel::Ge,
                Rel::Ge => Rel::Le,
                Rel::Eq => Rel::Eq,
            };
        }
    }
    // columns: structural | slack/surplus | artificial | rhs
    let mut n_slack = 0usize;
    for (_, rel, _) in rows.iter() {
        if !matches!(rel, Rel::Eq) {
            n_slack += 1;
        }
    }
    let mut n_art = 0usize;
    for (_, rel, b) in rows.iter() {
        match rel {
            Rel::Le => {}
            Rel::Ge => {
                if *b > EPS {
                    n_art += 1;
                }
            }
            Rel::Eq => n_art += 1,
        }
        let _ = b;
    }
    // Ge rows with b == 0 can start with the surplus basic at 0 only if we
    // negate the surplus; simplest to give every Ge/Eq row an artificial.
    n_art = rows.iter().filter(|(_, rel, _)| !matches!(rel, Rel::Le)).count();

    let width = ncols + n_slack + n_art + 1;
    let rhs_col = width - 1;
    let mut t = vec![0.0f64; (m + 2) * width]; // m rows + phase2 obj + phase1 obj
    let obj2_row = m;
    let obj1_row = m + 1;
    let idx = |r: usize, c: usize| r * width + c;

    let mut basis = vec![0usize; m];
    let mut scol = ncols;
    let mut acol = ncols + n_slack;
    for (r, (row, rel, b)) in rows.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            t[idx(r, c)] = *v;
        }
        t[idx(r, rhs_col)] = *b;
        match rel {
            Rel::Le => {
                t[idx(r, scol)] = 1.0;
                basis[r] = scol;
                scol += 1;
            }
            Rel::Ge => {
                t[idx(r, scol)] = -1.0;
                scol += 1;
                t[idx(r, acol)] = 1.0;
                basis[r] = acol;
                acol += 1;
            }
            Rel::Eq => {
                t[idx(r, acol)] = 1.0;
                basis[r] = acol;
                acol += 1;
            }
        }
    }
    // phase-2 objective row: c, reduced against the (slack) basis later
    for (c, v) in obj.iter().enumerate() {
        t[idx(obj2_row, c)] = *v;
    }
    // phase-1 objective: sum of artificial rows (minimize sum of artificials)
    let art_lo = ncols + n_slack;
    let art_hi = ncols + n_slack + n_art;
    for r in 0..m {
        if basis[r] >= art_lo {
            for c in 0..width {
                t[idx(obj1_row, c)] -= t[idx(r, c)];
            }
        }
    }

    let hard_cap = 200 * (m + ncols) + 20_000;
    let mut pivots = 0usize;
    let bland_after = 20 * (m + ncols) + 2_000;

    let mut run_phase = |t: &mut Vec<f64>,
                         basis: &mut Vec<usize>,
                         obj_row: usize,
                         allowed_hi: usize,
                         pivots: &mut usize|
     -> Result<bool> {
        loop {
            // pricing
            let mut enter = None;
            if *pivots < bland_after {
                let mut best = -1e-9;
                for c in 0..allowed_hi {
                    let rc = t[idx(obj_row, c)];
                    if rc < best {
                        best = rc;
                        enter = Some(c);
                    }
                }
            } else {
                for c in 0..allowed_hi {
                    if t[idx(obj_row, c)] < -EPS {
                        enter = Some(c);
                        break;
                    }
                }
            }
            let enter = match enter {
                Some(c) => c,
                None => return Ok(true), // optimal for this phase
            };
            // ratio test
            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for r in 0..m {
                let a = t[idx(r, enter)];
                if a > EPS {
                    let ratio = t[idx(r, rhs_col)] / a;
                    let better = ratio < best_ratio - 1e-12
                        || (ratio < best_ratio + 1e-12
                            && leave.map_or(true, |l| {
                                if *pivots >= bland_after {
                                    basis[r] < basis[l]
                                } else {
                                    t[idx(r, enter)].abs() > t[idx(l, enter)].abs()
                                }
                            }));
                    if better {
                        best_ratio = ratio;
                        leave = Some(r);
                    }
                }
            }
            let leave = match leave {
                Some(r) => r,
                None => return Ok(false), // unbounded direction
            };
            // pivot
            let p = t[idx(leave, enter)];
            let (lo, hi) = (idx(leave, 0), idx(leave, 0) + width);
            for v in &mut t[lo..hi] {
                *v /= p;
            }
            for r in 0..m + 2 {
                if r == leave {
                    continue;
                }
                let f = t[idx(r, enter)];
                if f.abs() <= 1e-13 {
                    continue;
                }
                let (plo, phi) = (idx(leave, 0), idx(leave, 0) + width);
                let (rlo, _rhi) = (idx(r, 0), idx(r, 0) + width);
                // manual split borrow
                let (a, b) = if rlo < plo {
                    let (x, y) = t.split_at_mut(plo);
                    (&mut x[rlo..rlo + width], &y[..width])
                } else {
                    let (x, y) = t.split_at_mut(rlo);
                    (&mut y[..width], &x[plo..phi])
                };
                for (av, bv) in a.iter_mut().zip(b.iter()) {
                    *av -= f * *bv;
                }
            }
            basis[leave] = enter;
            *pivots += 1;
            if *pivots > hard_cap {
                return Err(Error::LpFailure(format!(
                    "pivot cap exceeded ({} pivots, {m} rows, {ncols} cols)",
                    *pivots
                )));
            }
        }
    };

    // phase 1
    if n_art > 0 {
        let done = run_phase(&mut t, &mut basis, obj1_row, art_hi, &mut pivots)?;
        if !done {
            return Err(Error::LpFailure("phase-1 unbounded".into()));
        }
        let p1 = -t[idx(obj1_row, rhs_col)];
        if p1 > 1e-7 {
            return Ok(SimplexOutcome::Infeasible);
        }
        // drive remaining artificials out of the basis where possible
        for r in 0..m {
            if basis[r] >= art_lo && basis[r] < art_hi {
                if let Some(c) = (0..art_lo).find(|&c| t[idx(r, c)].abs() > 1e-7) {
                    let p = t[idx(r, c)];
                    for v in &mut t[idx(r, 0)..idx(r, 0) + width] {
                        *v /= p;
                    }
                    for rr in 0..m + 2 {
                        if rr == r {
                            continue;
                        }
                        let f = t[idx(rr, c)];
                        if f.abs() <= 1e-13 {
                            continue;
                        }
                        for cc in 0..width {
                            let sub = t[idx(r, cc)];
                            t[idx(rr, cc)] -= f * sub;
                        }
                    }
                    basis[r] = c;
                    pivots += 1;
                }
                // a row whose artificial cannot leave is redundant; it stays
                // basic at value ~0 and never re-enters (columns are barred).
            }
        }
    }

    // phase 2: bar artificial columns by pricing only up to art_lo
    let done = run_phase(&mut t, &mut basis, obj2_row, art_lo, &mut pivots)?;
    if !done {
        return Ok(SimplexOutcome::Unbounded);
    }

    let mut y = vec![0.0; ncols];
    for r in 0..m {
        if basis[r] < ncols {
            y[basis[r]] = t[idx(r, rhs_col)];
        }
    }
    Ok(SimplexOutcome::Solved(y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_x_at_least_3() {
        let mut lp = LinearProgram::new(1);
        lp.minimize(vec![1.0]).ge(&[(0, 1.0)], 3.0);
        let r = lp.solve().unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.x[0] - 3.0).abs() < 1e-9);
        assert!((r.objective - 3.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_band() {
        let mut lp = LinearProgram::new(1);
        lp.minimize(vec![1.0]).le(&[(0, 1.0)], 1.0).ge(&[(0, 1.0)], 2.0);
        let r = lp.solve().unwrap();
        assert_eq!(r.status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.free(0).minimize(vec![1.0]).le(&[(0, 1.0)], 5.0);
        let r = lp.solve().unwrap();
        assert_eq!(r.status, LpStatus::Unbounded);
    }

    #[test]
    fn feasibility_mode() {
        let mut lp = LinearProgram::new(2);
        lp.eq(&[(0, 1.0), (1, 1.0)], 1.0).ge(&[(0, 1.0)], 0.25);
        let r = lp.solve().unwrap();
        assert_eq!(r.status, LpStatus::Feasible);
        assert!(lp.violation(&r.x) < FEAS_TOL);
    }

    #[test]
    fn monotone_l1_projection_of_02_08() {
        // min sum t_i, t_i >= +-(d_i - q_i), q non-increasing pmf; d = (0.2, 0.8)
        // vars: q0 q1 t0 t1
        let d = [0.2, 0.8];
        let mut lp = LinearProgram::new(4);
        lp.minimize(vec![0.0, 0.0, 1.0, 1.0]);
        for i in 0..2 {
            lp.ge(&[(2 + i, 1.0), (i, 1.0)], d[i]); // t_i + q_i >= d_i
            lp.ge(&[(2 + i, 1.0), (i, -1.0)], -d[i]); // t_i - q_i >= -d_i
        }
        lp.ge(&[(0, 1.0), (1, -1.0)], 0.0); // q0 >= q1
        lp.eq(&[(0, 1.0), (1, 1.0)], 1.0);
        let r = lp.solve().unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective - 0.6).abs() < 1e-7, "objective {}", r.objective);
        assert!(lp.violation(&r.x) < FEAS_TOL);
    }

    #[test]
    fn box_bounds_and_negatives() {
        // min -x - 2y  s.t.  x + y <= 4, x in [-1, 3], y in [-2, 5]
        let mut lp = LinearProgram::new(2);
        lp.minimize(vec![-1.0, -2.0])
            .bounds(0, -1.0, 3.0)
            .bounds(1, -2.0, 5.0)
            .le(&[(0, 1.0), (1, 1.0)], 4.0);
        let r = lp.solve().unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        // optimum at y = 5, x = -1: obj = 1 - 10 = -9
        assert!((r.objective - -9.0).abs() < 1e-7, "objective {}", r.objective);
    }

    #[test]
    fn degenerate_cycling_guard() {
        // Beale's classic cycling example (under wrong pivot rules); Bland
        // fallback must terminate with the optimum -1/20... scaled variant.
        let mut lp = LinearProgram::new(4);
        lp.minimize(vec![-0.75, 150.0, -0.02, 6.0]);
        lp.le(&[(0, 0.25), (1, -60.0), (2, -1.0 / 25.0), (3, 9.0)], 0.0);
        lp.le(&[(0, 0.5), (1, -90.0), (2, -1.0 / 50.0), (3, 3.0)], 0.0);
        lp.le(&[(2, 1.0)], 1.0);
        let r = lp.solve().unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective - -0.05).abs() < 1e-7, "objective {}", r.objective);
    }

    #[test]
    fn duality_gap_on_handmade_pairs() {
        // Five primal LPs with hand-checked dual feasible points; weak duality
        // says dual objective <= primal optimum, and at these points the gap
        // closes to ~0.
        // 1) min x+y st x+2y>=3, 2x+y>=3  => x=y=1, opt 2; dual y=(1/3,1/3)
        let mut lp = LinearProgram::new(2);
        lp.minimize(vec![1.0, 1.0])
            .ge(&[(0, 1.0), (1, 2.0)], 3.0)
            .ge(&[(0, 2.0), (1, 1.0)], 3.0);
        let r = lp.solve().unwrap();
        let dual = 3.0 * (1.0 / 3.0) + 3.0 * (1.0 / 3.0);
        assert!((r.objective - dual).abs() < 1e-6);

        // 2) min 2x+3y st x+y>=10 => opt 20 at (10,0); dual y=2
        let mut lp = LinearProgram::new(2);
        lp.minimize(vec![2.0, 3.0]).ge(&[(0, 1.0), (1, 1.0)], 10.0);
        let r = lp.solve().unwrap();
        assert!((r.objective - 10.0 * 2.0).abs() < 1e-6);

        // 3) min x st x>=5, x>=3 => 5; dual (1, 0)
        let mut lp = LinearProgram::new(1);
        lp.minimize(vec![1.0]).ge(&[(0, 1.0)], 5.0).ge(&[(0, 1.0)], 3.0);
        let r = lp.solve().unwrap();
        assert!((r.objective - 5.0).abs() < 1e-6);

        // 4) min 3x+4y st x+2y=4, x-y>=1 => at (2,1): 10; dual (pi, u)=(10/3,-1/3)
        let mut lp = LinearProgram::new(2);
        lp.minimize(vec![3.0, 4.0])
            .eq(&[(0, 1.0), (1, 2.0)], 4.0)
            .ge(&[(0, 1.0), (1, -1.0)], 1.0);
        let r = lp.solve().unwrap();
        let dual = 4.0 * (10.0 / 3.0) + 1.0 * (-1.0 / 3.0);
        assert!((r.objective - dual).abs() < 1e-6, "objective {}", r.objective);

        // 5) min x+y+z st x+y>=2, y+z>=2, x+z>=2 => 3 at (1,1,1); dual (1/2,1/2,1/2)
        let mut lp = LinearProgram::new(3);
        lp.minimize(vec![1.0, 1.0, 1.0])
            .ge(&[(0, 1.0), (1, 1.0)], 2.0)
            .ge(&[(1, 1.0), (2, 1.0)], 2.0)
            .ge(&[(0, 1.0), (2, 1.0)], 2.0);
        let r = lp.solve().unwrap();
        assert!((r.objective - 3.0).abs() < 1e-6);
    }

    #[test]
    fn random_lps_match_vertex_enumeration() {
        use rand::Rng;
        let mut rng = crate::sampling::test_rng(23);
        let mut solved = 0;
        for _case in 0..300 {
            let n = rng.gen_range(1..=3usize);
            let m = rng.gen_range(1..=5usize);
            let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0f64)).collect();
            let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
            for _ in 0..m {
                let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0f64)).collect();
                let b: f64 = rng.gen_range(0.5..4.0);
                rows.push((a, b));
            }
            // x in [0, 5]^n, rows a.x <= b: bounded, feasible at 0
            let mut lp = LinearProgram::new(n);
            lp.minimize(c.clone());
            for i in 0..n {
                lp.bounds(i, 0.0, 5.0);
            }
            for (a, b) in &rows {
                let coeffs: Vec<(usize, f64)> = a.iter().cloned().enumerate().collect();
                lp.le(&coeffs, *b);
            }
            let r = lp.solve().unwrap();
            assert_eq!(r.status, LpStatus::Optimal);
            assert!(lp.violation(&r.x) < FEAS_TOL);

            // brute force: enumerate vertices as intersections of n active
            // constraints from {rows, x_i=0, x_i=5}
            let mut all: Vec<(Vec<f64>, f64)> = rows.clone();
            for i in 0..n {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                all.push((e.clone(), 5.0));
                for v in &mut e {
                    *v = -*v;
                }
                all.push((e, 0.0));
            }
            let k = all.len();
            let mut best = f64::INFINITY;
            let mut combo = vec![0usize; n];
            enumerate_combos(k, n, &mut combo, 0, 0, &mut |sel: &[usize]| {
                if let Some(x) = solve_square(&all, sel, n) {
                    let feas = all.iter().all(|(a, b)| {
                        a.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() <= b + 1e-7
                    });
                    if feas {
                        let val = c.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>();
                        if val < best {
                            best = val;
                        }
                    }
                }
            });
            assert!(
                (r.objective - best).abs() < 1e-5,
                "simplex {} vs brute {best}",
                r.objective
            );
            solved += 1;
        }
        assert_eq!(solved, 300);
    }

    fn enumerate_combos(
        k: usize,
        n: usize,
        combo: &mut Vec<usize>,
        depth: usize,
        start: usize,
        f: &mut impl FnMut(&[usize]),
    ) {
        if depth == n {
            f(combo);
            return;
        }
        for i in start..k {
            combo[depth] = i;
            enumerate_combos(k, n, combo, depth + 1, i + 1, f);
        }
    }

    fn solve_square(all: &[(Vec<f64>, f64)], sel: &[usize], n: usize) -> Option<Vec<f64>> {
        // Gaussian elimination on the n x n system
        let mut a = vec![vec![0.0; n + 1]; n];
        for (r, &s) in sel.iter().enumerate() {
            for c in 0..n {
                a[r][c] = all[s].0[c];
            }
            a[r][n] = all[s].1;
        }
        for col in 0..n {
            let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
            if a[piv][col].abs() < 1e-9 {
                return None;
            }
            a.swap(col, piv);
            let p = a[col][col];
            for v in &mut a[col] {
                *v /= p;
            }
            for r in 0..n {
                if r != col {
                    let f = a[r][col];
                    for c in 0..=n {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
        Some((0..n).map(|i| a[i][n]).collect())
    }
}
