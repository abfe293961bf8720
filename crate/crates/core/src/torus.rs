//! Finite truncations of the quantum torus at rational `θ = p/q`.
//!
//! Each representation point `(w, z)` contributes a `q × q` block with
//! `u = w·S` and `v = z·C`, where `C = diag(1, ω, …, ω^{q−1})`,
//! `ω = e^{2πip/q}`, and `S` is the cyclic shift. The derivation seminorm acts
//! on Fourier coefficients `α_{mn}` with `m, n ∈ {−M, …, M}`.
//!
//! Elements are represented by their coefficients, not only by their
//! realization: distinct modes can realize to the same matrix, and the
//! seminorm is defined on the coefficients.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraElement, FiniteAlgebra, Projection, StateSet};
use crate::classical::{self, FiniteMetricSpace, Subset};
use crate::error::{Error, Result};
use crate::hyper::{hausdorff_distance_with, infimum_distance_with, DistanceResult, HyperConfig, Method};
use crate::numerics::{eigh, CMatrix, HermitianMatrix, C64};
use crate::qmetric::{from_metric_pruned, kernel_check, Combine, DerivationFamily, DerivationMap, Seminorm};

/// Bound on `‖uv − e^{2πiθ}vu‖_max`.
pub const COMMUTATION_TOL: f64 = 1e-12;
pub const UNIT_MODULUS_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzyTorusConfig {
    pub q: usize,
    pub p: i64,
    /// Representation points `(w_j, z_j)` on the unit circle.
    pub points: Vec<(C64, C64)>,
    /// Fourier cutoff `M`.
    pub cutoff: usize,
    #[serde(default)]
    pub combine: Combine,
}

impl FuzzyTorusConfig {
    /// The realized spectrum of `v`: `z_j·ω^k`.
    pub fn v_spectrum(&self) -> Vec<C64> {
        self.points.iter().flat_map(|(_, z)| (0..self.q).map(move |k| z * root(self.p * k as i64, self.q))).collect()
    }

    /// `reps` points `(e^{iπ(2j+1)/(4q·reps)}, e^{iπ/(3q)})`. They share the
    /// spectrum of `v`, and neither `u` nor `v` is self-adjoint in any block.
    pub fn standard(q: usize, p: i64, reps: usize, cutoff: usize) -> Self {
        let z = C64::from_polar(1.0, PI / (3 * q) as f64);
        let points = (0..reps)
            .map(|j| (C64::from_polar(1.0, PI * (2 * j + 1) as f64 / (4 * q * reps) as f64), z))
            .collect();
        Self { q, p, points, cutoff, combine: Combine::Max }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn clock(q: usize, p: i64) -> CMatrix {
    let d: Vec<C64> = (0..q).map(|k| root(p * k as i64, q)).collect();
    CMatrix::from_fn(q, q, |i, j| if i == j { d[i] } else { C64::new(0.0, 0.0) })
}

pub fn shift(q: usize) -> CMatrix {
    CMatrix::from_fn(q, q, |i, j| if j == (i + 1) % q { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}

/// `e^{2πi k/q}` with the exponent reduced first.
fn root(k: i64, q: usize) -> C64 {
    let r = k.rem_euclid(q as i64) as usize;
    if (4 * r).is_multiple_of(q) {
        return [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)][4 * r / q];
    }
    C64::from_polar(1.0, 2.0 * PI * r as f64 / q as f64)
}

/// Fourier coefficients `α_{mn}`, row-major over `m, n ∈ {−M, …, M}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusElement {
    cutoff: usize,
    coeffs: Vec<C64>,
}

impl TorusElement {
    pub fn zero(cutoff: usize) -> Self {
        let w = 2 * cutoff + 1;
        Self { cutoff, coeffs: vec![C64::new(0.0, 0.0); w * w] }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    fn index(&self, m: i64, n: i64) -> Option<usize> {
        let c = self.cutoff as i64;
        if m.abs() > c || n.abs() > c {
            return None;
        }
        Some(((m + c) * (2 * c + 1) + (n + c)) as usize)
    }

    pub fn get(&self, m: i64, n: i64) -> C64 {
        self.index(m, n).map_or(C64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    pub fn set(&mut self, m: i64, n: i64, value: C64) -> Result<()> {
        let i = self
            .index(m, n)
            .ok_or_else(|| Error::InvalidInput(format!("mode ({m}, {n}) exceeds the cutoff {}", self.cutoff)))?;
        self.coeffs[i] = value;
        Ok(())
    }

    /// Nonzero coefficients in increasing `(m, n)` order.
    pub fn terms(&self) -> Vec<(i64, i64, C64)> {
        let c = self.cutoff as i64;
        let mut out = Vec::new();
        for m in -c..=c {
            for n in -c..=c {
                let a = self.get(m, n);
                if a != C64::new(0.0, 0.0) {
                    out.push((m, n, a));
                }
            }
        }
        out
    }

    /// The same coefficients under another cutoff.
    pub fn with_cutoff(&self, cutoff: usize) -> Result<Self> {
        let mut out = Self::zero(cutoff);
        for (m, n, a) in self.terms() {
            out.set(m, n, a)?;
        }
        Ok(out)
    }

    /// `(u^m v^n + (u^m v^n)*)/2`.
    pub fn real_mode(theta: f64, m: i64, n: i64, cutoff: usize) -> Result<Self> {
        Self::mode_pair(theta, m, n, cutoff, C64::new(0.5, 0.0))
    }

    /// `(u^m v^n − (u^m v^n)*)/(2i)`.
    pub fn imag_mode(theta: f64, m: i64, n: i64, cutoff: usize) -> Result<Self> {
        Self::mode_pair(theta, m, n, cutoff, C64::new(0.0, -0.5))
    }

    fn mode_pair(theta: f64, m: i64, n: i64, cutoff: usize, a: C64) -> Result<Self> {
        let mut e = Self::zero(cutoff);
        if m == 0 && n == 0 {
            e.set(0, 0, C64::new(2.0 * a.re, 0.0))?;
            return Ok(e);
        }
        e.set(m, n, a)?;
        e.set(-m, -n, a.conj() * adjoint_phase(theta, m, n))?;
        Ok(e)
    }

    /// Largest violation of `α_{−m,−n} = conj(α_{mn})·e^{−2πiθmn}`.
    pub fn hermitian_defect(&self, theta: f64) -> f64 {
        let c = self.cutoff as i64;
        let mut worst = 0.0f64;
        for m in -c..=c {
            for n in -c..=c {
                let d = self.get(-m, -n) - self.get(m, n).conj() * adjoint_phase(theta, m, n);
                worst = worst.max(d.norm());
            }
        }
        worst
    }
}

/// `(u^m v^n)* = e^{−2πiθmn} u^{−m} v^{−n}`.
fn adjoint_phase(theta: f64, m: i64, n: i64) -> C64 {
    C64::from_polar(1.0, -2.0 * PI * theta * (m * n) as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusBundle {
    pub config: FuzzyTorusConfig,
    pub algebra: FiniteAlgebra,
    pub theta: f64,
    pub u: AlgebraElement,
    pub v: AlgebraElement,
    pub commutation_residual: f64,
}

pub fn build(config: &FuzzyTorusConfig) -> Result<TorusBundle> {
    let q = config.q;
    if q == 0 {
        return Err(Error::InvalidInput("q must be positive".into()));
    }
    if gcd(config.p.unsigned_abs(), q as u64) != 1 {
        return Err(Error::InvalidInput(format!("p = {} is not coprime to q = {q}", config.p)));
    }
    if config.points.is_empty() {
        return Err(Error::InvalidInput("at least one representation point is needed".into()));
    }
    if config.cutoff == 0 {
        return Err(Error::InvalidInput("the Fourier cutoff must be positive".into()));
    }
    for (k, (w, z)) in config.points.iter().enumerate() {
        if (w.norm() - 1.0).abs() > UNIT_MODULUS_TOL || (z.norm() - 1.0).abs() > UNIT_MODULUS_TOL {
            return Err(Error::InvalidInput(format!("representation point {k} is off the unit circle")));
        }
        if config.points[..k].iter().any(|(w2, z2)| (w - w2).norm() <= UNIT_MODULUS_TOL && (z - z2).norm() <= UNIT_MODULUS_TOL) {
            return Err(Error::InvalidInput(format!("representation point {k} is repeated")));
        }
    }
    let algebra = FiniteAlgebra::new(vec![q; config.points.len()])?;
    let (s, c) = (shift(q), clock(q, config.p));
    let u = AlgebraElement::new(&algebra, config.points.iter().map(|(w, _)| s.scale(*w)).collect())?;
    let v = AlgebraElement::new(&algebra, config.points.iter().map(|(_, z)| c.scale(*z)).collect())?;
    let phase = root(config.p, q);
    let uv = u.mul(&v)?;
    let vu = v.mul(&u)?.scale_complex(phase);
    let commutation_residual = uv.max_abs_diff(&vu);
    if commutation_residual > COMMUTATION_TOL {
        return Err(Error::NumericalFailure(format!("commutation residual {commutation_residual:e}")));
    }
    Ok(TorusBundle { theta: config.p as f64 / q as f64, config: config.clone(), algebra, u, v, commutation_residual })
}

impl TorusBundle {
    /// `u^m v^n`, realized blockwise.
    pub fn monomial(&self, m: i64, n: i64) -> Vec<CMatrix> {
        let q = self.config.q;
        let sm = shift(q);
        let mut s_pow = CMatrix::identity(q);
        for _ in 0..m.rem_euclid(q as i64) {
            s_pow = &s_pow * &sm;
        }
        let c_pow = clock(q, self.config.p * n);
        let base = &s_pow * &c_pow;
        self.config.points.iter().map(|(w, z)| base.scale(w.powi(m as i32) * z.powi(n as i32))).collect()
    }

    pub fn realize(&self, a: &TorusElement) -> Result<AlgebraElement> {
        let q = self.config.q;
        let mut blocks = vec![CMatrix::zeros(q, q); self.config.points.len()];
        for (m, n, c) in a.terms() {
            for (b, w) in blocks.iter_mut().zip(self.monomial(m, n)) {
                *b = &*b + &w.scale(c);
            }
        }
        AlgebraElement::new(&self.algebra, blocks)
    }

    fn check_hermitian(&self, a: &TorusElement) -> Result<()> {
        let defect = a.hermitian_defect(self.theta);
        if defect > 1e-10 {
            return Err(Error::NotHermitian(defect));
        }
        Ok(())
    }

    /// `L(a) = max(‖δ₁a‖, ‖δ₂a‖)` (or the sum), evaluated from the
    /// coefficients directly.
    pub fn seminorm_of(&self, a: &TorusElement) -> Result<f64> {
        self.check_hermitian(a)?;
        let q = self.config.q;
        let mut norms = [0.0f64; 2];
        for (dir, out) in norms.iter_mut().enumerate() {
            let mut blocks = vec![CMatrix::zeros(q, q); self.config.points.len()];
            for (m, n, c) in a.terms() {
                let k = if dir == 0 { m } else { n };
                if k == 0 {
                    continue;
                }
                let f = c * C64::new(0.0, 2.0 * PI * k as f64);
                for (b, w) in blocks.iter_mut().zip(self.monomial(m, n)) {
                    *b = &*b + &w.scale(f);
                }
            }
            for b in blocks {
                let d = eigh(&HermitianMatrix::new(b.hermitian_part()).expect("hermitian part"));
                *out = out.max(d.spectral_radius());
            }
        }
        Ok(match self.config.combine {
            Combine::Max => norms[0].max(norms[1]),
            Combine::Sum => norms[0] + norms[1],
        })
    }

    /// Modes `(m, n)` with `m > 0`, or `m = 0` and `n > 0`, shell by shell
    /// in `max(|m|, |n|)` and lexicographic within a shell.
    pub fn half_modes(&self) -> Vec<(i64, i64)> {
        let c = self.config.cutoff as i64;
        let mut out = Vec::new();
        for shell in 1..=c {
            for m in 0..=shell {
                for n in -shell..=shell {
                    if (m > 0 || n > 0) && m.max(n.abs()) == shell {
                        out.push((m, n));
                    }
                }
            }
        }
        out
    }

    fn mode_columns(&self, m: i64, n: i64) -> Result<[Vec<f64>; 2]> {
        let cut = self.config.cutoff;
        Ok([
            self.realize(&TorusElement::real_mode(self.theta, m, n, cut)?)?.hermitian_part().realify(),
            self.realize(&TorusElement::imag_mode(self.theta, m, n, cut)?)?.hermitian_part().realify(),
        ])
    }

    /// Parameters after the unit: `X_{mn}` and `Y_{mn}` over
    /// [`half_modes`](Self::half_modes), skipping any whose realization lies
    /// in the span of earlier ones. The first lift of each realized mode wins.
    pub fn param_layout(&self) -> Result<Vec<ParamSlot>> {
        let mut basis: Vec<Vec<f64>> = Vec::new();
        let unit = self.algebra.identity().realify();
        let un = crate::numerics::norm(&unit);
        basis.push(unit.iter().map(|x| x / un).collect());
        let mut out = Vec::new();
        for (m, n) in self.half_modes() {
            for (imag, col) in self.mode_columns(m, n)?.into_iter().enumerate() {
                let scale = crate::numerics::norm(&col);
                let mut r = col;
                for b in &basis {
                    let c = crate::numerics::dot(b, &r);
                    for (ri, bi) in r.iter_mut().zip(b) {
                        *ri -= c * bi;
                    }
                }
                let rn = crate::numerics::norm(&r);
                if rn > ALIAS_TOL * scale.max(1.0) {
                    basis.push(r.iter().map(|x| x / rn).collect());
                    out.push(ParamSlot { m, n, imag: imag == 1 });
                }
            }
        }
        Ok(out)
    }

    /// Parameters of `a` for [`torus_seminorm`]: the unit coefficient, then
    /// the weights of the slots of [`param_layout`](Self::param_layout).
    pub fn params(&self, a: &TorusElement) -> Result<Vec<f64>> {
        self.check_hermitian(a)?;
        let cut = self.config.cutoff as i64;
        if a.terms().iter().any(|&(m, n, _)| m.abs().max(n.abs()) > cut) {
            return Err(Error::InvalidInput("element exceeds the cutoff of the bundle".into()));
        }
        let layout = self.param_layout()?;
        let mut beta = vec![a.get(0, 0).re];
        for (m, n) in self.half_modes() {
            let c = a.get(m, n);
            for (imag, w) in [(false, 2.0 * c.re), (true, -2.0 * c.im)] {
                if layout.iter().any(|s| s.m == m && s.n == n && s.imag == imag) {
                    beta.push(w);
                } else if w != 0.0 {
                    return Err(Error::Unsupported(format!(
                        "mode ({m}, {n}) aliases a lower mode in this truncation; use its canonical lift"
                    )));
                }
            }
        }
        Ok(beta)
    }
}

/// Tolerance for a realized mode to count as new.
pub const ALIAS_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSlot {
    pub m: i64,
    pub n: i64,
    /// `Y_{mn}` when set, `X_{mn}` otherwise.
    pub imag: bool,
}

/// Derivation seminorm of the bundle on parameters `(1, X_{mn}, Y_{mn})`
/// with `δ₁X = −2πm·Y`, `δ₁Y = 2πm·X` and `δ₂` likewise with `n`.
pub fn torus_seminorm(bundle: &TorusBundle) -> Result<Seminorm> {
    let layout = bundle.param_layout()?;
    let r = 1 + layout.len();
    let dim = bundle.algebra.realified_dim();
    let mut cols: Vec<Vec<f64>> = vec![bundle.algebra.identity().realify()];
    let mut dcols: [Vec<Vec<f64>>; 2] = [vec![vec![0.0; dim]], vec![vec![0.0; dim]]];
    for s in &layout {
        let [x, y] = bundle.mode_columns(s.m, s.n)?;
        cols.push(if s.imag { y.clone() } else { x.clone() });
        for (dir, d) in dcols.iter_mut().enumerate() {
            let w = 2.0 * PI * (if dir == 0 { s.m } else { s.n }) as f64;
            d.push(if s.imag { x.iter().map(|t| w * t).collect() } else { y.iter().map(|t| -w * t).collect() });
        }
    }
    let to_rows = |cols: &[Vec<f64>]| {
        let mut out = vec![0.0; dim * r];
        for (j, c) in cols.iter().enumerate() {
            for (i, x) in c.iter().enumerate() {
                out[i * r + j] = *x;
            }
        }
        out
    };
    let realize = to_rows(&cols);
    let maps = dcols.iter().map(|d| DerivationMap { target: bundle.algebra.clone(), matrix: to_rows(d) }).collect();
    let l = Seminorm::derivation(
        &bundle.algebra,
        DerivationFamily { param_dim: r, realize, maps, combine: bundle.config.combine },
    )?;
    if !kernel_check(&l, &bundle.algebra)?.valid {
        return Err(Error::KernelViolation("the torus seminorm vanishes on non-scalar elements".into()));
    }
    Ok(l)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubCircle {
    pub z: C64,
    pub set: StateSet,
    pub feasible: bool,
}

/// `T_{θ,z}`: states with `μ(v^k) = z^k` for `k = 1, …, max(1, q−1)`.
pub fn subcircle(bundle: &TorusBundle, z: C64) -> Result<SubCircle> {
    if (z.norm() - 1.0).abs() > UNIT_MODULUS_TOL {
        return Err(Error::InvalidInput(format!("sub-circle target {z} is off the unit circle")));
    }
    let top = bundle.config.q.saturating_sub(1).max(1);
    let mut constraints = Vec::with_capacity(top);
    let mut targets = Vec::with_capacity(top);
    let mut vk = bundle.v.clone();
    for k in 1..=top {
        constraints.push(vk.clone());
        targets.push(z.powi(k as i32));
        vk = vk.mul(&bundle.v)?;
    }
    let set = StateSet::moment(&bundle.algebra, constraints, targets)?;
    let feasible = !set.resolve()?.is_empty();
    Ok(SubCircle { z, set, feasible })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub i: usize,
    pub j: usize,
    pub infimum: DistanceResult,
    pub hausdorff: DistanceResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusTable {
    pub zs: Vec<C64>,
    /// Unordered pairs `i < j`; the diagonal is zero.
    pub entries: Vec<TableEntry>,
}

impl TorusTable {
    fn find(&self, i: usize, j: usize) -> Option<&TableEntry> {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.entries.iter().find(|e| e.i == a && e.j == b)
    }

    pub fn infimum(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            self.find(i, j).map_or(f64::NAN, |e| e.infimum.value)
        }
    }

    pub fn hausdorff(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            self.find(i, j).map_or(f64::NAN, |e| e.hausdorff.value)
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("z,z',I_value,I_lower,I_upper,H_value,H_lower,H_upper,method\n");
        for e in &self.entries {
            let m = e.infimum.method.max(e.hausdorff.method);
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                fmt_complex(self.zs[e.i]),
                fmt_complex(self.zs[e.j]),
                fmt_num(e.infimum.value),
                fmt_num(e.infimum.lower),
                fmt_num(e.infimum.upper),
                fmt_num(e.hausdorff.value),
                fmt_num(e.hausdorff.lower),
                fmt_num(e.hausdorff.upper),
                m.as_str()
            ));
        }
        s
    }
}

pub fn fmt_num(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:.11e}")
    }
}

fn fmt_complex(z: C64) -> String {
    format!("{:.11e}{:+.11e}i", z.re, z.im)
}

/// `I` and `H` between every pair of sub-circles; all must be nonempty.
pub fn subcircle_distance_table(bundle: &TorusBundle, l: &Seminorm, zs: &[C64], cfg: &HyperConfig) -> Result<TorusTable> {
    let sets: Vec<SubCircle> = zs.iter().map(|&z| subcircle(bundle, z)).collect::<Result<_>>()?;
    if let Some(s) = sets.iter().find(|s| !s.feasible) {
        return Err(Error::EmptySet(format!("no state of the truncation restricts to z = {} on v", s.z)));
    }
    let pairs: Vec<(usize, usize)> = (0..zs.len()).flat_map(|i| (i + 1..zs.len()).map(move |j| (i, j))).collect();
    let entries = pairs
        .par_iter()
        .map(|&(i, j)| {
            log::debug!("sub-circle pair ({i}, {j})");
            Ok(TableEntry {
                i,
                j,
                infimum: infimum_distance_with(&sets[i].set, &sets[j].set, l, cfg)?,
                hausdorff: hausdorff_distance_with(&sets[i].set, &sets[j].set, l, cfg)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TorusTable { zs: zs.to_vec(), entries })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineRow {
    pub b: usize,
    pub b2: usize,
    pub circle_distance: f64,
    pub classical_infimum: f64,
    pub classical_hausdorff: f64,
    pub infimum: f64,
    pub hausdorff: f64,
    pub method: Method,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub n: usize,
    pub step: f64,
    /// Sub-circle `b = 0` against every `b2`.
    pub rows: Vec<BaselineRow>,
    /// `H` between sub-circles `b` and `b + 1`, for every `b`.
    pub adjacent: Vec<f64>,
    pub continuity_modulus: f64,
    /// Largest deviation of `I` or `H` from the circle distance.
    pub max_deviation: f64,
    pub max_adjacent_error: f64,
    pub max_duality_gap: f64,
}

fn circle(i: usize, j: usize, n: usize) -> f64 {
    let k = i.abs_diff(j);
    2.0 * PI / n as f64 * k.min(n - k) as f64
}

/// The commutative `N × N` grid torus with the ℓ1 product of arc-length
/// metrics; sub-circles `{(a, b) : a}` for fixed `b`.
pub fn classical_baseline(n: usize, cfg: &HyperConfig) -> Result<BaselineReport> {
    if n < 4 {
        return Err(Error::InvalidInput(format!("grid size {n} is below 4")));
    }
    let pts = n * n;
    let d: Vec<f64> = (0..pts * pts)
        .map(|k| {
            let (x, y) = (k / pts, k % pts);
            circle(x / n, y / n, n) + circle(x % n, y % n, n)
        })
        .collect();
    let space = FiniteMetricSpace::from_flat(pts, d)?;
    let l = from_metric_pruned(&space)?;
    let members = |b: usize| -> Vec<bool> { (0..pts).map(|x| x % n == b).collect() };
    let subsets: Vec<Subset> = (0..n).map(|b| Subset::from_indicator(members(b))).collect();
    let faces: Vec<StateSet> = (0..n)
        .map(|b| StateSet::face_from_projection(&Projection::indicator(l.algebra(), &members(b))?))
        .collect::<Result<_>>()?;

    let row = |b: usize, b2: usize| -> Result<(BaselineRow, f64)> {
        let i = infimum_distance_with(&faces[b], &faces[b2], &l, cfg)?;
        let h = hausdorff_distance_with(&faces[b], &faces[b2], &l, cfg)?;
        Ok((
            BaselineRow {
                b,
                b2,
                circle_distance: circle(b, b2, n),
                classical_infimum: classical::infimum(&subsets[b], &subsets[b2], &space)?,
                classical_hausdorff: classical::hausdorff(&subsets[b], &subsets[b2], &space)?,
                infimum: i.value,
                hausdorff: h.value,
                method: i.method.max(h.method),
            },
            i.duality_gap.max(h.duality_gap),
        ))
    };
    let rows: Vec<(BaselineRow, f64)> = (0..n).into_par_iter().map(|b2| row(0, b2)).collect::<Result<_>>()?;
    let adjacent: Vec<(BaselineRow, f64)> = (0..n).into_par_iter().map(|b| row(b, (b + 1) % n)).collect::<Result<_>>()?;

    let step = 2.0 * PI / n as f64;
    let mut max_deviation = 0.0f64;
    let mut max_duality_gap = 0.0f64;
    for (r, gap) in rows.iter().chain(&adjacent) {
        for x in [r.infimum, r.hausdorff, r.classical_infimum, r.classical_hausdorff] {
            max_deviation = max_deviation.max((x - r.circle_distance).abs());
        }
        max_duality_gap = max_duality_gap.max(*gap);
    }
    let adjacent_h: Vec<f64> = adjacent.iter().map(|(r, _)| r.hausdorff).collect();
    Ok(BaselineReport {
        n,
        step,
        continuity_modulus: adjacent_h.iter().cloned().fold(0.0, f64::max),
        max_adjacent_error: adjacent_h.iter().map(|h| (h - step).abs()).fold(0.0, f64::max),
        adjacent: adjacent_h,
        rows: rows.into_iter().map(|(r, _)| r).collect(),
        max_deviation,
        max_duality_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmetric::rho;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn clock_shift_examples() {
        let b = build(&FuzzyTorusConfig { points: vec![(c(1.0, 0.0), c(1.0, 0.0))], ..FuzzyTorusConfig::standard(2, 1, 1, 1) }).unwrap();
        assert_eq!(clock(2, 1).max_abs_diff(&CMatrix::from_real_diag(&[1.0, -1.0])), 0.0);
        assert_eq!(shift(2).max_abs_diff(&CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])), 0.0);
        let sc = &shift(2) * &clock(2, 1);
        let cs = &clock(2, 1) * &shift(2);
        assert!(sc.max_abs_diff(&cs.scale_real(-1.0)) < 1e-15);
        assert!(b.commutation_residual <= 1e-12);
        for q in 1..6 {
            for reps in 1..3 {
                assert!(build(&FuzzyTorusConfig::standard(q, 1, reps, 1)).unwrap().commutation_residual <= 1e-12);
            }
        }
        assert!(build(&FuzzyTorusConfig::standard(4, 2, 1, 1)).is_err());
        let one = build(&FuzzyTorusConfig::standard(1, 0, 1, 1)).unwrap();
        assert!(one.u.mul(&one.v).unwrap().max_abs_diff(&one.v.mul(&one.u).unwrap()) == 0.0);
    }

    #[test]
    fn seminorm_examples() {
        let b = build(&FuzzyTorusConfig { points: vec![(c(1.0, 0.0), c(1.0, 0.0))], ..FuzzyTorusConfig::standard(3, 1, 1, 1) }).unwrap();
        let l = torus_seminorm(&b).unwrap();
        let one = {
            let mut e = TorusElement::zero(1);
            e.set(0, 0, c(1.0, 0.0)).unwrap();
            e
        };
        assert_eq!(b.seminorm_of(&one).unwrap(), 0.0);
        let cv = TorusElement::real_mode(b.theta, 0, 1, 1).unwrap();
        let cu = TorusElement::real_mode(b.theta, 1, 0, 1).unwrap();
        let expect = 2.0 * PI * 3f64.sqrt() / 2.0;
        assert!((b.seminorm_of(&cv).unwrap() - expect).abs() < 1e-12);
        assert!((b.seminorm_of(&cu).unwrap() - expect).abs() < 1e-12);
        for e in [&cv, &cu] {
            let p = b.params(e).unwrap();
            assert!((l.eval_params(&p) - b.seminorm_of(e).unwrap()).abs() < 1e-12);
            let realized = l.realize_params(&p);
            let direct = b.realize(e).unwrap().realify();
            assert!(realized.iter().zip(&direct).all(|(x, y)| (x - y).abs() < 1e-12));
        }
    }

    #[test]
    fn subcircle_examples() {
        let b = build(&FuzzyTorusConfig { points: vec![(c(1.0, 0.0), c(1.0, 0.0))], ..FuzzyTorusConfig::standard(2, 1, 1, 1) }).unwrap();
        let s = subcircle(&b, c(1.0, 0.0)).unwrap();
        assert!(s.feasible);
        let r = s.set.resolve().unwrap();
        assert_eq!(r.total_rank(), 1);
        assert!(!subcircle(&b, c(0.0, 1.0)).unwrap().feasible);
        assert!(subcircle(&b, c(2.0, 0.0)).is_err());

        let two = FuzzyTorusConfig { points: vec![(c(1.0, 0.0), c(1.0, 0.0)), (c(0.0, 1.0), c(1.0, 0.0))], ..FuzzyTorusConfig::standard(2, 1, 1, 1) };
        let b2 = build(&two).unwrap();
        let r = subcircle(&b2, c(1.0, 0.0)).unwrap().set.resolve().unwrap();
        assert_eq!(r.parts.iter().map(|p| p.block).collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn singleton_table_equals_rho() {
        let b = build(&FuzzyTorusConfig::standard(2, 1, 1, 1)).unwrap();
        let l = torus_seminorm(&b).unwrap();
        let zs = b.config.v_spectrum();
        let t = subcircle_distance_table(&b, &l, &zs, &HyperConfig::default()).unwrap();
        let e = &t.entries[0];
        let s0 = subcircle(&b, zs[0]).unwrap().set.resolve().unwrap().center();
        let s1 = subcircle(&b, zs[1]).unwrap().set.resolve().unwrap().center();
        let r = rho(&l, &s0, &s1).unwrap();
        assert!((e.infimum.value - r.value).abs() <= 1e-4 * r.value);
        assert!((e.hausdorff.value - r.value).abs() <= 1e-4 * r.value);
        assert_eq!(t.infimum(1, 1), 0.0);
        assert!(t.to_csv().lines().count() == 2);
    }

    #[test]
    fn doubling_cutoff_keeps_the_seminorm() {
        let b1 = build(&FuzzyTorusConfig::standard(3, 1, 2, 1)).unwrap();
        let b2 = build(&FuzzyTorusConfig::standard(3, 1, 2, 2)).unwrap();
        let mut e = TorusElement::real_mode(b1.theta, 1, -1, 1).unwrap();
        let f = TorusElement::imag_mode(b1.theta, 0, 1, 1).unwrap();
        for (m, n, a) in f.terms() {
            e.set(m, n, e.get(m, n) + a * 0.3).unwrap();
        }
        let wide = e.with_cutoff(2).unwrap();
        assert_eq!(b1.seminorm_of(&e).unwrap(), b2.seminorm_of(&wide).unwrap());
    }

    #[test]
    fn small_baseline() {
        let r = classical_baseline(4, &HyperConfig::default()).unwrap();
        assert!(r.max_deviation < 1e-9, "{r:?}");
        assert!(r.max_adjacent_error < 1e-9);
    }
}
