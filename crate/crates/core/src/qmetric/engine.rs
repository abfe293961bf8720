//! Cutting planes for
//! `sup_{L(a) ≤ 1} [min_{μ ∈ S} μ(a) − max_{ν ∈ S'} ν(a)]`.
//!
//! By the minimax theorem this is `inf_{μ ∈ S, ν ∈ S'} ρ_L(μ, ν)`; with both
//! sides single states it is `ρ_L(μ, ν)` itself. The inner minimum over a face
//! is the smallest eigenvalue of the compression of `a`; residual moment
//! constraints enter through Lagrange multipliers. Everything is linear in
//! the variables once the spectral functions are replaced by finitely many
//! rank-one cuts, so each round is an LP. The LP value bounds the supremum
//! from above; a rescaled copy of the LP point is feasible and bounds it from
//! below.
//!
//! The LP is solved in column form (one column per cut, one row per
//! variable), which keeps the basis small; the variables are read off the
//! duals and the column weights give the witness states.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use super::{derivation_norm, mat_vec, Seminorm, SeminormKind};
use crate::algebra::{compress, ResolvedSet, State};
use crate::error::{Error, Result};
use crate::numerics::cmatrix::{I, ONE, ZERO};
use crate::numerics::{dot, eigh, solve_lp, CMatrix, HermitianMatrix, LinearProgram, LpStatus, Sense, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CuttingPlaneConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_cuts: usize,
    /// Bound on every LP variable; an active bound voids the round's upper
    /// bound.
    pub box_bound: f64,
}

impl Default for CuttingPlaneConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-4, abs_tol: 1e-9, max_cuts: 500, box_bound: 1e6 }
    }
}

impl CuttingPlaneConfig {
    pub fn tight() -> Self {
        Self { rel_tol: 1e-6, ..Self::default() }
    }
}

pub(crate) enum Side<'a> {
    Fixed(&'a State),
    Set(&'a ResolvedSet),
}

pub(crate) struct SaddleOutcome {
    pub lower: f64,
    pub upper: f64,
    /// Realified `a` with `L(a) ≤ 1` attaining `lower`.
    pub element: Vec<f64>,
    pub left: State,
    pub right: State,
    pub iterations: usize,
    pub converged: bool,
    pub upper_history: Vec<f64>,
}

enum CutKind {
    Ball,
    Left { part: usize, x: Vec<C64> },
    Right { part: usize, x: Vec<C64> },
    Bound,
}

struct Cut {
    coeffs: Vec<f64>,
    rhs: f64,
    kind: CutKind,
}

struct Layout {
    gamma: usize,
    kappa: Option<usize>,
    kappa_r: Option<usize>,
    eta: Vec<usize>,
    eta_r: Vec<usize>,
    tau: Vec<usize>,
    dim: usize,
}

/// `e_a`, `(e_a ± e_b)/√2` and `(e_a ± i e_b)/√2`; their rank-one projections
/// span the Hermitian matrices.
fn probe_vectors(n: usize) -> Vec<Vec<C64>> {
    let mut out = Vec::new();
    for a in 0..n {
        let mut v = vec![ZERO; n];
        v[a] = ONE;
        out.push(v);
    }
    for a in 0..n {
        for b in a + 1..n {
            for phase in [ONE, -ONE, I, -I] {
                let mut v = vec![ZERO; n];
                v[a] = C64::new(FRAC_1_SQRT_2, 0.0);
                v[b] = phase * FRAC_1_SQRT_2;
                out.push(v);
            }
        }
    }
    out
}

fn quad(h: &CMatrix, x: &[C64]) -> f64 {
    crate::numerics::cmatrix::dot(x, &h.mul_vec(x)).re
}

struct Problem<'a> {
    l: &'a Seminorm,
    left: &'a Side<'a>,
    right: &'a Side<'a>,
    layout: Layout,
    /// Complement of the kernel, in parameter space.
    basis: Vec<Vec<f64>>,
    /// `R b_i`, realified.
    element_cols: Vec<Vec<f64>>,
    /// Per derivation map, `M_j b_i` in the target's realified coordinates.
    map_cols: Vec<Vec<Vec<f64>>>,
}

impl<'a> Problem<'a> {
    fn new(l: &'a Seminorm, left: &'a Side<'a>, right: &'a Side<'a>) -> Self {
        let (basis, _) = l.kernel_split();
        let element_cols: Vec<Vec<f64>> = basis.iter().map(|b| l.realize_params(b)).collect();
        let map_cols = match l.kind() {
            SeminormKind::Derivation(f) => {
                f.maps.iter().map(|m| basis.iter().map(|b| mat_vec(&m.matrix, f.param_dim, b)).collect()).collect()
            }
            SeminormKind::Polyhedral { .. } => vec![],
        };
        let mut next = basis.len();
        let mut take = |k: usize| -> Vec<usize> {
            let v: Vec<usize> = (next..next + k).collect();
            next += k;
            v
        };
        let kappa = matches!(left, Side::Set(_)).then(|| take(1)[0]);
        let kappa_r = matches!(right, Side::Set(_)).then(|| take(1)[0]);
        let eta = match left {
            Side::Set(s) => take(s.residual.len()),
            Side::Fixed(_) => vec![],
        };
        let eta_r = match right {
            Side::Set(s) => take(s.residual.len()),
            Side::Fixed(_) => vec![],
        };
        let tau = match l.kind() {
            SeminormKind::Derivation(f) if f.combine == super::Combine::Sum => take(f.maps.len()),
            _ => vec![],
        };
        let layout = Layout { gamma: basis.len(), kappa, kappa_r, eta, eta_r, tau, dim: next };
        Self { l, left, right, layout, basis, element_cols, map_cols }
    }

    fn gamma_coeffs(&self, g: &[f64]) -> Vec<f64> {
        self.element_cols.iter().map(|e| dot(e, g)).collect()
    }

    fn objective(&self) -> Vec<f64> {
        let lay = &self.layout;
        let mut c = vec![0.0; lay.dim];
        if let Side::Fixed(mu) = self.left {
            for (ci, v) in c.iter_mut().zip(self.gamma_coeffs(&mu.realify())) {
                *ci += v;
            }
        }
        if let Side::Fixed(nu) = self.right {
            for (ci, v) in c.iter_mut().zip(self.gamma_coeffs(&nu.realify())) {
                *ci -= v;
            }
        }
        if let Some(k) = lay.kappa {
            c[k] = 1.0;
        }
        if let Some(k) = lay.kappa_r {
            c[k] = -1.0;
        }
        if let Side::Set(s) = self.left {
            for (&j, r) in lay.eta.iter().zip(&s.residual) {
                c[j] = r.target;
            }
        }
        if let Side::Set(s) = self.right {
            for (&j, r) in lay.eta_r.iter().zip(&s.residual) {
                c[j] = -r.target;
            }
        }
        c
    }

    /// `κ − ⟨V x x* V*, a⟩ + Σ η_j x* H_j x ≤ 0`
    fn left_cut(&self, set: &ResolvedSet, part: usize, x: Vec<C64>) -> Cut {
        let p = &set.parts[part];
        let y = p.isometry.mul_vec(&x);
        let g = set.algebra.embed_outer(p.block, &y);
        let mut coeffs = vec![0.0; self.layout.dim];
        for (c, v) in coeffs.iter_mut().zip(self.gamma_coeffs(&g)) {
            *c = -v;
        }
        coeffs[self.layout.kappa.unwrap()] = 1.0;
        for (&j, r) in self.layout.eta.iter().zip(&set.residual) {
            coeffs[j] = quad(&r.compressed[part], &x);
        }
        Cut { coeffs, rhs: 0.0, kind: CutKind::Left { part, x } }
    }

    /// `−κ' + ⟨V x x* V*, a⟩ − Σ η'_j x* H'_j x ≤ 0`
    fn right_cut(&self, set: &ResolvedSet, part: usize, x: Vec<C64>) -> Cut {
        let p = &set.parts[part];
        let y = p.isometry.mul_vec(&x);
        let g = set.algebra.embed_outer(p.block, &y);
        let mut coeffs = vec![0.0; self.layout.dim];
        coeffs[..self.layout.gamma].copy_from_slice(&self.gamma_coeffs(&g));
        coeffs[self.layout.kappa_r.unwrap()] = -1.0;
        for (&j, r) in self.layout.eta_r.iter().zip(&set.residual) {
            coeffs[j] = -quad(&r.compressed[part], &x);
        }
        Cut { coeffs, rhs: 0.0, kind: CutKind::Right { part, x } }
    }

    /// `sign · x* δ_j(a) x ≤ 1`, or `≤ τ_j` for the sum combination.
    fn ball_cut(&self, j: usize, block: usize, x: &[C64], sign: f64) -> Cut {
        let SeminormKind::Derivation(f) = self.l.kind() else { unreachable!("ball cuts need a derivation seminorm") };
        let g = f.maps[j].target.embed_outer(block, x);
        let mut coeffs = vec![0.0; self.layout.dim];
        for (c, col) in coeffs.iter_mut().zip(&self.map_cols[j]) {
            *c = sign * dot(col, &g);
        }
        let rhs = if self.layout.tau.is_empty() {
            1.0
        } else {
            coeffs[self.layout.tau[j]] = -1.0;
            0.0
        };
        Cut { coeffs, rhs, kind: CutKind::Ball }
    }

    fn initial_cuts(&self, box_bound: f64) -> Vec<Cut> {
        let lay = &self.layout;
        let mut cuts = Vec::new();
        match self.l.kind() {
            SeminormKind::Polyhedral { generators } => {
                for g in generators {
                    let h = self.gamma_coeffs(&g.h.realify());
                    for sign in [1.0, -1.0] {
                        let mut coeffs = vec![0.0; lay.dim];
                        for (c, v) in coeffs.iter_mut().zip(&h) {
                            *c = sign * v;
                        }
                        cuts.push(Cut { coeffs, rhs: g.c, kind: CutKind::Ball });
                    }
                }
            }
            SeminormKind::Derivation(f) => {
                for (j, m) in f.maps.iter().enumerate() {
                    for (b, &n) in m.target.blocks().iter().enumerate() {
                        for x in probe_vectors(n) {
                            for sign in [1.0, -1.0] {
                                cuts.push(self.ball_cut(j, b, &x, sign));
                            }
                        }
                    }
                }
                if !lay.tau.is_empty() {
                    let mut coeffs = vec![0.0; lay.dim];
                    for &t in &lay.tau {
                        coeffs[t] = 1.0;
                    }
                    cuts.push(Cut { coeffs, rhs: 1.0, kind: CutKind::Ball });
                }
            }
        }
        for (side, is_left) in [(self.left, true), (self.right, false)] {
            let Side::Set(set) = side else { continue };
            for (pi, p) in set.parts.iter().enumerate() {
                let mut xs = probe_vectors(p.rank());
                for r in &set.residual {
                    let d = eigh(&HermitianMatrix::new(r.compressed[pi].clone()).expect("compressed constraint"));
                    xs.push(d.vector(0));
                    xs.push(d.vector(p.rank() - 1));
                }
                for x in xs {
                    cuts.push(if is_left { self.left_cut(set, pi, x) } else { self.right_cut(set, pi, x) });
                }
            }
        }
        for i in 0..lay.dim {
            for sign in [1.0, -1.0] {
                let mut coeffs = vec![0.0; lay.dim];
                coeffs[i] = sign;
                cuts.push(Cut { coeffs, rhs: box_bound, kind: CutKind::Bound });
            }
        }
        cuts
    }

    fn element(&self, gamma: &[f64]) -> Vec<f64> {
        let dim = self.l.algebra().realified_dim();
        let mut a = vec![0.0; dim];
        for (g, col) in gamma.iter().zip(&self.element_cols) {
            for (ai, ci) in a.iter_mut().zip(col) {
                *ai += g * ci;
            }
        }
        a
    }

    fn params(&self, gamma: &[f64]) -> Vec<f64> {
        let mut beta = vec![0.0; self.l.param_dim()];
        for (g, b) in gamma.iter().zip(&self.basis) {
            for (x, y) in beta.iter_mut().zip(b) {
                *x += g * y;
            }
        }
        beta
    }

    /// `min_p λ_min(V_p* (a − Σ η_j h_j) V_p) + Σ η_j t_j` (or the max
    /// version), with the attaining part and eigenvector.
    fn set_value(&self, set: &ResolvedSet, a: &[f64], eta: &[f64], minimize: bool) -> (f64, usize, Vec<C64>) {
        let elem = crate::algebra::AlgebraElement::from_realified(&set.algebra, a).expect("realified element");
        let mut best: Option<(f64, usize, Vec<C64>)> = None;
        for (pi, p) in set.parts.iter().enumerate() {
            let mut m = compress(&elem, p).into_matrix();
            for (e, r) in eta.iter().zip(&set.residual) {
                m = &m - &r.compressed[pi].scale_real(*e);
            }
            let d = eigh(&HermitianMatrix::new(m.hermitian_part()).expect("compression"));
            let k = if minimize { 0 } else { p.rank() - 1 };
            let v = d.eigenvalues[k];
            let better = match &best {
                None => true,
                Some((b, _, _)) => (minimize && v < *b) || (!minimize && v > *b),
            };
            if better {
                best = Some((v, pi, d.vector(k)));
            }
        }
        let (v, pi, x) = best.expect("nonempty set");
        let shift: f64 = eta.iter().zip(&set.residual).map(|(e, r)| e * r.target).sum();
        (v + shift, pi, x)
    }
}

fn solve_column_form(cuts: &[Cut], c: &[f64]) -> Result<(Vec<f64>, f64, Vec<f64>)> {
    let mut lp = LinearProgram::new(Sense::Minimize);
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); c.len()];
    for cut in cuts {
        let w = lp.add_nonneg(cut.rhs);
        for (i, &v) in cut.coeffs.iter().enumerate() {
            if v != 0.0 {
                rows[i].push((w, v));
            }
        }
    }
    for (row, &ci) in rows.into_iter().zip(c) {
        lp.add_eq(row, ci);
    }
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::NumericalFailure(format!("cutting-plane master LP ended {:?}", sol.status)));
    }
    Ok((sol.dual, sol.objective, sol.primal))
}

fn witness(set: &ResolvedSet, cuts: &[Cut], weights: &[f64], left: bool) -> State {
    let mut blocks: Vec<CMatrix> = set.algebra.blocks().iter().map(|&n| CMatrix::zeros(n, n)).collect();
    let mut total = 0.0;
    for (cut, &w) in cuts.iter().zip(weights) {
        let (part, x) = match (&cut.kind, left) {
            (CutKind::Left { part, x }, true) | (CutKind::Right { part, x }, false) => (*part, x),
            _ => continue,
        };
        if w <= 0.0 {
            continue;
        }
        let p = &set.parts[part];
        let y = p.isometry.mul_vec(x);
        blocks[p.block] = &blocks[p.block] + &CMatrix::outer(&y, &y).scale_real(w);
        total += w;
    }
    if total <= 0.0 {
        return set.center();
    }
    let blocks = blocks.iter().map(|b| b.scale_real(1.0 / total)).collect();
    State::from_blocks_unchecked(&set.algebra, blocks)
}

pub(crate) fn saddle(l: &Seminorm, left: Side<'_>, right: Side<'_>, cfg: &CuttingPlaneConfig) -> Result<SaddleOutcome> {
    for side in [&left, &right] {
        if let Side::Set(s) = side {
            if s.is_empty() {
                return Err(Error::EmptySet("cutting planes need nonempty sets".into()));
            }
        }
    }
    let prob = Problem::new(l, &left, &right);
    let lay = &prob.layout;
    let c = prob.objective();
    let mut cuts = prob.initial_cuts(cfg.box_bound);
    let initial = cuts.len();

    let mut lower = 0.0;
    let mut element = vec![0.0; l.algebra().realified_dim()];
    let mut upper = f64::INFINITY;
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut weights: Vec<f64>;
    loop {
        let (y, value, w) = solve_column_form(&cuts, &c)?;
        iterations += 1;
        let box_active = cuts.iter().zip(&w).any(|(cut, &wk)| matches!(cut.kind, CutKind::Bound) && wk > 1e-12);
        if !box_active {
            upper = upper.min(value);
        }
        history.push(upper);
        weights = w;

        let gamma = &y[..lay.gamma];
        let a = prob.element(gamma);
        let beta = prob.params(gamma);
        let mut new_cuts = Vec::new();

        let left_val = match &left {
            Side::Fixed(mu) => dot(&mu.realify(), &a),
            Side::Set(set) => {
                let eta: Vec<f64> = lay.eta.iter().map(|&j| y[j]).collect();
                let (v, part, x) = prob.set_value(set, &a, &eta, true);
                let kappa = y[lay.kappa.unwrap()];
                if v - eta.iter().zip(&set.residual).map(|(e, r)| e * r.target).sum::<f64>() < kappa - 1e-12 {
                    new_cuts.push(prob.left_cut(set, part, x));
                }
                v
            }
        };
        let right_val = match &right {
            Side::Fixed(nu) => dot(&nu.realify(), &a),
            Side::Set(set) => {
                let eta: Vec<f64> = lay.eta_r.iter().map(|&j| y[j]).collect();
                let (v, part, x) = prob.set_value(set, &a, &eta, false);
                let kappa = y[lay.kappa_r.unwrap()];
                if v - eta.iter().zip(&set.residual).map(|(e, r)| e * r.target).sum::<f64>() > kappa + 1e-12 {
                    new_cuts.push(prob.right_cut(set, part, x));
                }
                v
            }
        };
        let ball = l.eval_params(&beta);
        if let SeminormKind::Derivation(f) = l.kind() {
            for (j, m) in f.maps.iter().enumerate() {
                let (nj, block, x, sign) = derivation_norm(m, f.param_dim, &beta);
                let limit = if lay.tau.is_empty() { 1.0 } else { y[lay.tau[j]] };
                if nj > limit + 1e-12 {
                    new_cuts.push(prob.ball_cut(j, block, &x, sign));
                }
            }
        }

        let s = 1.0 / ball.max(1.0);
        let candidate = s * (left_val - right_val);
        if candidate > lower {
            lower = candidate;
            element = a.iter().map(|v| v * s).collect();
        }
        let gap = upper - lower;
        if gap <= cfg.abs_tol.max(cfg.rel_tol * upper.abs()) {
            converged = true;
            break;
        }
        if new_cuts.is_empty() || cuts.len() - initial >= cfg.max_cuts {
            break;
        }
        cuts.extend(new_cuts);
    }
    log::debug!("cutting planes: {iterations} rounds, {} cuts, bounds [{lower:e}, {upper:e}]", cuts.len() - initial);

    let left_state = match &left {
        Side::Fixed(mu) => (*mu).clone(),
        Side::Set(set) => witness(set, &cuts, &weights, true),
    };
    let right_state = match &right {
        Side::Fixed(nu) => (*nu).clone(),
        Side::Set(set) => witness(set, &cuts, &weights, false),
    };
    Ok(SaddleOutcome {
        lower,
        upper: upper.max(lower),
        element,
        left: left_state,
        right: right_state,
        iterations,
        converged,
        upper_history: history,
    })
}
