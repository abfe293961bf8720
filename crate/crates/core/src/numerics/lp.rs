//! Revised simplex with a dense basis inverse and sparse columns.
//!
//! Pricing takes the most negative reduced cost and falls back to Bland's
//! lowest-index rule after a run of degenerate pivots, returning to the
//! steepest rule once the objective moves; Bland phases cannot cycle, so the
//! method terminates.
//!
//! Problems are stated with equality rows and per-variable bounds. Internally
//! every variable is shifted, reflected or split so that it is nonnegative,
//! finite upper bounds become extra rows, and a two-phase method with one
//! artificial per row finds an optimal basis. Duals are reported for the
//! caller's equality rows together with a dual objective evaluated from the
//! reduced costs and the original bounds, so strong duality can be checked
//! independently of the primal path.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pivot elements smaller than this are never used.
pub const PIVOT_TOL: f64 = 1e-9;
/// Phase-one objective above this declares infeasibility.
pub const INFEASIBILITY_TOL: f64 = 1e-8;
const REDUCED_COST_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 64;
const MAX_PIVOTS: usize = 200_000;
/// Consecutive degenerate pivots before switching to Bland's rule.
const STALL_LIMIT: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// `optimize c·x  s.t.  A x = b,  lo <= x <= hi`.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub bounds: Vec<(f64, f64)>,
    pub rows: Vec<Vec<(usize, f64)>>,
    pub rhs: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    /// One multiplier per equality row, signed for the caller's sense.
    pub dual: Vec<f64>,
    pub objective: f64,
    pub dual_objective: f64,
    pub pivots: usize,
}

impl LpSolution {
    pub fn duality_gap(&self) -> f64 {
        (self.objective - self.dual_objective).abs()
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        Self { sense, objective: vec![], bounds: vec![], rows: vec![], rhs: vec![] }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_var(&mut self, cost: f64, lo: f64, hi: f64) -> usize {
        self.objective.push(cost);
        self.bounds.push((lo, hi));
        self.objective.len() - 1
    }

    pub fn add_nonneg(&mut self, cost: f64) -> usize {
        self.add_var(cost, 0.0, f64::INFINITY)
    }

    pub fn add_free(&mut self, cost: f64) -> usize {
        self.add_var(cost, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn add_eq(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) -> usize {
        self.rows.push(coeffs);
        self.rhs.push(rhs);
        self.rows.len() - 1
    }

    /// `coeffs · x <= rhs` through a nonnegative slack.
    pub fn add_le(&mut self, mut coeffs: Vec<(usize, f64)>, rhs: f64) -> usize {
        let s = self.add_nonneg(0.0);
        coeffs.push((s, 1.0));
        self.add_eq(coeffs, rhs)
    }

    /// `coeffs · x >= rhs` through a nonnegative surplus.
    pub fn add_ge(&mut self, mut coeffs: Vec<(usize, f64)>, rhs: f64) -> usize {
        let s = self.add_nonneg(0.0);
        coeffs.push((s, -1.0));
        self.add_eq(coeffs, rhs)
    }

    fn validate(&self) -> Result<()> {
        if self.rows.len() != self.rhs.len() {
            return Err(Error::Shape(format!("{} rows but {} right-hand sides", self.rows.len(), self.rhs.len())));
        }
        if self.bounds.len() != self.objective.len() {
            return Err(Error::Shape("bounds and objective lengths differ".into()));
        }
        let n = self.num_vars();
        for row in &self.rows {
            if let Some(&(j, _)) = row.iter().find(|(j, _)| *j >= n) {
                return Err(Error::Shape(format!("row references variable {j} of {n}")));
            }
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(Error::InvalidInput(format!("variable {j} has bounds [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    /// Evaluates `c·x` in the caller's sense.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of rows and bounds at `x`.
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (row, &b) in self.rows.iter().zip(&self.rhs) {
            let lhs: f64 = row.iter().map(|&(j, a)| a * x[j]).sum();
            worst = worst.max((lhs - b).abs());
        }
        for (&(lo, hi), &v) in self.bounds.iter().zip(x) {
            worst = worst.max(lo - v).max(v - hi);
        }
        worst
    }
}

#[derive(Clone, Copy, Debug)]
enum VarMap {
    /// x = offset + x'
    Shift { col: usize, offset: f64 },
    /// x = offset - x'
    Reflect { col: usize, offset: f64 },
    /// x = x⁺ - x⁻
    Split { pos: usize, neg: usize },
    Fixed(f64),
}

struct Standard {
    m: usize,
    /// Sparse columns `(row, value)`, rows already sign-normalized.
    cols: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    b: Vec<f64>,
    row_sign: Vec<f64>,
    maps: Vec<VarMap>,
    /// Number of structural (non-artificial) columns.
    structural: usize,
}

fn standardize(lp: &LinearProgram) -> Standard {
    let m0 = lp.rows.len();
    let minimize_sign = if lp.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let mut maps = Vec::with_capacity(lp.num_vars());
    let mut cost = Vec::new();
    let mut ncols = 0usize;
    let mut upper_rows: Vec<(usize, f64)> = Vec::new();
    for (j, &(lo, hi)) in lp.bounds.iter().enumerate() {
        let c = minimize_sign * lp.objective[j];
        if lo == hi {
            maps.push(VarMap::Fixed(lo));
        } else if lo.is_finite() {
            maps.push(VarMap::Shift { col: ncols, offset: lo });
            cost.push(c);
            if hi.is_finite() {
                upper_rows.push((ncols, hi - lo));
            }
            ncols += 1;
        } else if hi.is_finite() {
            maps.push(VarMap::Reflect { col: ncols, offset: hi });
            cost.push(-c);
            ncols += 1;
        } else {
            maps.push(VarMap::Split { pos: ncols, neg: ncols + 1 });
            cost.push(c);
            cost.push(-c);
            ncols += 2;
        }
    }
    let m = m0 + upper_rows.len();
    // slack columns for the upper-bound rows
    let slack_base = ncols;
    ncols += upper_rows.len();
    cost.extend(std::iter::repeat_n(0.0, upper_rows.len()));

    let mut cols = vec![vec![0.0; m]; ncols];
    let mut b = vec![0.0; m];
    for (i, row) in lp.rows.iter().enumerate() {
        let mut rhs = lp.rhs[i];
        for &(j, a) in row {
            match maps[j] {
                VarMap::Fixed(v) => rhs -= a * v,
                VarMap::Shift { col, offset } => {
                    cols[col][i] += a;
                    rhs -= a * offset;
                }
                VarMap::Reflect { col, offset } => {
                    cols[col][i] -= a;
                    rhs -= a * offset;
                }
                VarMap::Split { pos, neg } => {
                    cols[pos][i] += a;
                    cols[neg][i] -= a;
                }
            }
        }
        b[i] = rhs;
    }
    for (k, &(col, width)) in upper_rows.iter().enumerate() {
        let i = m0 + k;
        cols[col][i] = 1.0;
        cols[slack_base + k][i] = 1.0;
        b[i] = width;
    }
    let mut row_sign = vec![1.0; m];
    for i in 0..m {
        if b[i] < 0.0 {
            row_sign[i] = -1.0;
            b[i] = -b[i];
        }
    }
    let mut cols: Vec<Vec<(usize, f64)>> = cols
        .into_iter()
        .map(|c| c.into_iter().enumerate().filter(|&(_, v)| v != 0.0).map(|(i, v)| (i, v * row_sign[i])).collect())
        .collect();
    let structural = ncols;
    // artificial identity columns
    for i in 0..m {
        cols.push(vec![(i, 1.0)]);
    }
    cost.extend(std::iter::repeat_n(0.0, m));
    Standard { m, cols, cost, b, row_sign, maps, structural }
}

struct Tableau<'a> {
    std: &'a Standard,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    binv: Vec<Vec<f64>>,
    xb: Vec<f64>,
    pivots: usize,
    since_refactor: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl<'a> Tableau<'a> {
    fn new(std: &'a Standard) -> Self {
        let m = std.m;
        let basis: Vec<usize> = (0..m).map(|i| std.structural + i).collect();
        let mut in_basis = vec![false; std.cols.len()];
        for &j in &basis {
            in_basis[j] = true;
        }
        let binv = (0..m)
            .map(|i| {
                let mut r = vec![0.0; m];
                r[i] = 1.0;
                r
            })
            .collect();
        Self { std, basis, in_basis, binv, xb: std.b.clone(), pivots: 0, since_refactor: 0 }
    }

    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.std.m;
        let mut y = vec![0.0; m];
        for (k, &j) in self.basis.iter().enumerate() {
            let cb = cost[j];
            if cb != 0.0 {
                for i in 0..m {
                    y[i] += cb * self.binv[k][i];
                }
            }
        }
        y
    }

    fn ftran(&self, col: &[(usize, f64)]) -> Vec<f64> {
        self.binv.iter().map(|r| col.iter().map(|&(i, a)| r[i] * a).sum()).collect()
    }

    fn ftran_dense(&self, col: &[f64]) -> Vec<f64> {
        self.binv.iter().map(|r| r.iter().zip(col).map(|(a, b)| a * b).sum()).collect()
    }

    fn pivot(&mut self, leave: usize, enter: usize, d: &[f64]) {
        let m = self.std.m;
        let piv = d[leave];
        let theta = self.xb[leave] / piv;
        for i in 0..m {
            if i != leave {
                self.xb[i] -= theta * d[i];
                if self.xb[i] < 0.0 && self.xb[i] > -1e-11 {
                    self.xb[i] = 0.0;
                }
            }
        }
        self.xb[leave] = theta;
        let pivot_row: Vec<f64> = self.binv[leave].iter().map(|v| v / piv).collect();
        for i in 0..m {
            if i != leave && d[i] != 0.0 {
                let f = d[i];
                for (a, p) in self.binv[i].iter_mut().zip(&pivot_row) {
                    *a -= f * p;
                }
            }
        }
        self.binv[leave] = pivot_row;
        self.in_basis[self.basis[leave]] = false;
        self.in_basis[enter] = true;
        self.basis[leave] = enter;
        self.pivots += 1;
        self.since_refactor += 1;
    }

    /// Recomputes the basis inverse by Gauss-Jordan elimination.
    fn refactor(&mut self) -> Result<()> {
        let m = self.std.m;
        let mut a: Vec<Vec<f64>> = vec![vec![0.0; m]; m];
        for (k, &j) in self.basis.iter().enumerate() {
            for &(i, v) in &self.std.cols[j] {
                a[i][k] = v;
            }
        }
        let mut inv: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                let mut r = vec![0.0; m];
                r[i] = 1.0;
                r
            })
            .collect();
        for c in 0..m {
            let p = (c..m)
                .max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))
                .expect("nonempty range");
            if a[p][c].abs() < 1e-13 {
                return Err(Error::NumericalFailure("singular basis during refactorization".into()));
            }
            a.swap(p, c);
            inv.swap(p, c);
            let d = a[c][c];
            for v in a[c].iter_mut() {
                *v /= d;
            }
            for v in inv[c].iter_mut() {
                *v /= d;
            }
            for r in 0..m {
                if r != c && a[r][c] != 0.0 {
                    let f = a[r][c];
                    for k in 0..m {
                        a[r][k] -= f * a[c][k];
                        inv[r][k] -= f * inv[c][k];
                    }
                }
            }
        }
        // inv is B^{-1} with rows indexed like basis positions
        self.binv = inv;
        self.xb = self.ftran_dense(&self.std.b);
        for v in self.xb.iter_mut() {
            if *v < 0.0 && *v > -1e-9 {
                *v = 0.0;
            }
        }
        self.since_refactor = 0;
        Ok(())
    }

    fn run(&mut self, cost: &[f64], allow: impl Fn(usize) -> bool) -> Result<Outcome> {
        let m = self.std.m;
        let mut stall = 0usize;
        let mut y: Vec<f64> = Vec::new();
        loop {
            if self.pivots >= MAX_PIVOTS {
                return Err(Error::NumericalFailure(format!("simplex exceeded {MAX_PIVOTS} pivots (cycling guard)")));
            }
            if self.since_refactor >= REFACTOR_EVERY.max(2 * m) {
                self.refactor()?;
            }
            if self.since_refactor == 0 || y.len() != m {
                y = self.duals(cost);
            }
            let bland = stall >= STALL_LIMIT;
            let mut entering = None;
            let mut entering_rc = 0.0;
            let mut best_rc = -REDUCED_COST_TOL;
            for j in 0..self.std.cols.len() {
                if self.in_basis[j] || !allow(j) {
                    continue;
                }
                let rc = cost[j] - self.std.cols[j].iter().map(|&(i, a)| y[i] * a).sum::<f64>();
                if rc < best_rc {
                    entering = Some(j);
                    entering_rc = rc;
                    if bland {
                        break;
                    }
                    best_rc = rc;
                }
            }
            let Some(enter) = entering else {
                return Ok(Outcome::Optimal);
            };
            let d = self.ftran(&self.std.cols[enter]);
            let mut leave: Option<usize> = None;
            let mut best = f64::INFINITY;
            for k in 0..m {
                if d[k] > PIVOT_TOL {
                    let ratio = self.xb[k].max(0.0) / d[k];
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            let tol = 1e-12 * best.abs().max(1.0);
                            ratio < best - tol
                                || (ratio <= best + tol
                                    && if bland { self.basis[k] < self.basis[l] } else { d[k] > d[l] })
                        }
                    };
                    if better {
                        best = ratio;
                        leave = Some(k);
                    }
                }
            }
            let Some(leave) = leave else {
                return Ok(Outcome::Unbounded);
            };
            if best > 0.0 {
                stall = 0;
            } else {
                stall += 1;
            }
            // y' = y + rc/d_r · (row r of the old inverse)
            let f = entering_rc / d[leave];
            for (yi, bi) in y.iter_mut().zip(&self.binv[leave]) {
                *yi += f * bi;
            }
            self.pivot(leave, enter, &d);
        }
    }
}

/// Solves a linear program. Infeasible and unbounded problems are reported
/// through [`LpStatus`]; errors are reserved for malformed input and
/// numerical breakdown.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let std = standardize(lp);
    let m = std.m;
    let ncols = std.cols.len();
    let mut t = Tableau::new(&std);

    let nv = lp.num_vars();
    let failed = |status, pivots| LpSolution {
        status,
        primal: vec![0.0; nv],
        dual: vec![0.0; lp.num_rows()],
        objective: f64::NAN,
        dual_objective: f64::NAN,
        pivots,
    };

    if m > 0 {
        let phase1_cost: Vec<f64> = (0..ncols).map(|j| if j >= std.structural { 1.0 } else { 0.0 }).collect();
        match t.run(&phase1_cost, |_| true)? {
            Outcome::Optimal => {}
            Outcome::Unbounded => return Err(Error::NumericalFailure("phase one reported unbounded".into())),
        }
        t.refactor()?;
        let infeas: f64 = t.basis.iter().zip(&t.xb).filter(|(&j, _)| j >= std.structural).map(|(_, &v)| v).sum();
        if infeas > INFEASIBILITY_TOL {
            return Ok(failed(LpStatus::Infeasible, t.pivots));
        }
        // Drive artificials out where a structural pivot exists.
        for k in 0..m {
            if t.basis[k] < std.structural {
                continue;
            }
            let row = t.binv[k].clone();
            let candidate = (0..std.structural).find(|&j| {
                !t.in_basis[j] && std.cols[j].iter().map(|&(i, a)| row[i] * a).sum::<f64>().abs() > PIVOT_TOL
            });
            if let Some(j) = candidate {
                let d = t.ftran(&std.cols[j]);
                t.pivot(k, j, &d);
            }
        }
    }

    let structural = std.structural;
    match t.run(&std.cost, |j| j < structural)? {
        Outcome::Unbounded => return Ok(failed(LpStatus::Unbounded, t.pivots)),
        Outcome::Optimal => {}
    }
    if m > 0 {
        t.refactor()?;
    }

    let mut xs = vec![0.0; ncols];
    for (k, &j) in t.basis.iter().enumerate() {
        xs[j] = t.xb[k];
    }
    let primal: Vec<f64> = std
        .maps
        .iter()
        .map(|map| match *map {
            VarMap::Fixed(v) => v,
            VarMap::Shift { col, offset } => offset + xs[col],
            VarMap::Reflect { col, offset } => offset - xs[col],
            VarMap::Split { pos, neg } => xs[pos] - xs[neg],
        })
        .collect();

    // Duals of the minimization form, mapped back through the row signs.
    let ys = t.duals(&std.cost);
    let sense_sign = if lp.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let y_min: Vec<f64> = (0..lp.num_rows()).map(|i| ys[i] * std.row_sign[i]).collect();

    // Dual objective of the minimization form from reduced costs and bounds.
    let mut reduced: Vec<f64> = lp.objective.iter().map(|c| sense_sign * c).collect();
    for (i, row) in lp.rows.iter().enumerate() {
        for &(j, a) in row {
            reduced[j] -= a * y_min[i];
        }
    }
    let mut dual_obj: f64 = lp.rhs.iter().zip(&y_min).map(|(b, y)| b * y).sum();
    for (j, &r) in reduced.iter().enumerate() {
        let (lo, hi) = lp.bounds[j];
        if r > REDUCED_COST_TOL {
            dual_obj += if lo.is_finite() { r * lo } else { f64::NEG_INFINITY };
        } else if r < -REDUCED_COST_TOL {
            dual_obj += if hi.is_finite() { r * hi } else { f64::NEG_INFINITY };
        } else if lo.is_finite() || hi.is_finite() {
            // inactive reduced cost: attribute it at the bound the primal sits on
            let at = if lo.is_finite() && (!hi.is_finite() || (primal[j] - lo).abs() <= (primal[j] - hi).abs()) { lo } else { hi };
            dual_obj += r * at;
        }
    }

    let objective = lp.evaluate(&primal);
    Ok(LpSolution {
        status: LpStatus::Optimal,
        primal,
        dual: y_min.iter().map(|y| sense_sign * y).collect(),
        objective,
        dual_objective: sense_sign * dual_obj,
        pivots: t.pivots,
    })
}
