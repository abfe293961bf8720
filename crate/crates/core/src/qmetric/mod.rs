//! Seminorms on self-adjoint parts and the pseudo-metric
//! `ρ_L(μ, ν) = sup{|μ(b) − ν(b)| : L(b) ≤ 1}` they induce on states.
//!
//! Polyhedral seminorms `L(a) = max_k |⟨h_k, a⟩| / c_k` are evaluated exactly
//! by linear programming. Derivation seminorms `L(a) = max_j ‖δ_j(a)‖` (or the
//! sum) are handled by a cutting-plane method that keeps certified bounds.
//!
//! A derivation seminorm lives on a parameter space: an element is
//! `a = R β` for a real parameter vector `β`, and each `δ_j` is a real-linear
//! map from parameters to self-adjoint matrices. For plain derivations on the
//! whole algebra `R` is the identity on realified coordinates.

mod engine;

pub use engine::CuttingPlaneConfig;
pub(crate) use engine::{saddle, Side};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraElement, FiniteAlgebra, State, CONSTRAINT_TOL};
use crate::classical::FiniteMetricSpace;
use crate::error::{Error, Result};
use crate::numerics::{
    dot, eigh, norm, row_space_split, solve_lp, HermitianMatrix, LinearProgram, LpStatus, Sense,
};
use crate::random;

/// Relative cut-off on Gram eigenvalues when separating a kernel from its
/// complement.
pub const KERNEL_REL_TOL: f64 = 1e-12;
/// Tolerance of the exact polyhedral path.
pub const POLYHEDRAL_GAP_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Combine {
    #[default]
    Max,
    Sum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub h: AlgebraElement,
    pub c: f64,
}

/// A real-linear map from parameters to self-adjoint elements of `target`,
/// stored as a `target.realified_dim() × param_dim` row-major matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivationMap {
    pub target: FiniteAlgebra,
    pub matrix: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivationFamily {
    pub param_dim: usize,
    /// `realified_dim × param_dim`, row-major.
    pub realize: Vec<f64>,
    pub maps: Vec<DerivationMap>,
    pub combine: Combine,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SeminormKind {
    Polyhedral { generators: Vec<Generator> },
    Derivation(DerivationFamily),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Seminorm {
    algebra: FiniteAlgebra,
    kind: SeminormKind,
    #[serde(skip)]
    split: SplitCache,
}

type Split = (Vec<Vec<f64>>, Vec<Vec<f64>>);

/// Lazily computed kernel split; ignored by comparisons.
#[derive(Clone, Debug, Default)]
struct SplitCache(std::sync::OnceLock<Split>);

impl PartialEq for SplitCache {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Seminorm {
    pub fn polyhedral(algebra: &FiniteAlgebra, generators: Vec<(AlgebraElement, f64)>) -> Result<Self> {
        let unit = algebra.unit_coords();
        let mut gens = Vec::with_capacity(generators.len());
        for (k, (h, c)) in generators.into_iter().enumerate() {
            if h.algebra() != algebra {
                return Err(Error::Shape(format!("generator {k} lives in another algebra")));
            }
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::InvalidInput(format!("generator {k} has weight {c}; weights must be positive")));
            }
            if !h.is_hermitian(CONSTRAINT_TOL) {
                return Err(Error::NotHermitian(h.hermitian_defect()));
            }
            let h = h.hermitian_part();
            let r = h.realify();
            let tr = dot(&r, &unit);
            if tr.abs() > CONSTRAINT_TOL * (1.0 + norm(&r)) {
                return Err(Error::InvalidInput(format!("generator {k} has trace {tr}; generators must be traceless")));
            }
            gens.push(Generator { h, c });
        }
        Ok(Self { algebra: algebra.clone(), kind: SeminormKind::Polyhedral { generators: gens }, split: SplitCache::default() })
    }

    /// `L(a) = max_j ‖i[D_j, a]‖` (or the sum) on the whole self-adjoint part.
    pub fn commutator(algebra: &FiniteAlgebra, ds: &[AlgebraElement], combine: Combine) -> Result<Self> {
        let dim = algebra.realified_dim();
        let mut maps = Vec::with_capacity(ds.len());
        for d in ds {
            if d.algebra() != algebra {
                return Err(Error::Shape("commutator element lives in another algebra".into()));
            }
            if !d.is_hermitian(CONSTRAINT_TOL) {
                return Err(Error::NotHermitian(d.hermitian_defect()));
            }
            let d = d.hermitian_part();
            let mut matrix = vec![0.0; dim * dim];
            for col in 0..dim {
                let mut e = vec![0.0; dim];
                e[col] = 1.0;
                let a = AlgebraElement::from_realified(algebra, &e)?;
                let blocks = d
                    .blocks()
                    .iter()
                    .zip(a.blocks())
                    .map(|(db, ab)| db.commutator(ab).scale(crate::numerics::cmatrix::I))
                    .collect();
                let img = AlgebraElement::new(algebra, blocks)?.realify();
                for row in 0..dim {
                    matrix[row * dim + col] = img[row];
                }
            }
            maps.push(DerivationMap { target: algebra.clone(), matrix });
        }
        let mut realize = vec![0.0; dim * dim];
        for i in 0..dim {
            realize[i * dim + i] = 1.0;
        }
        Self::derivation(algebra, DerivationFamily { param_dim: dim, realize, maps, combine })
    }

    pub fn derivation(algebra: &FiniteAlgebra, family: DerivationFamily) -> Result<Self> {
        let dim = algebra.realified_dim();
        if family.realize.len() != dim * family.param_dim {
            return Err(Error::Shape(format!(
                "realization has {} entries, expected {}x{}",
                family.realize.len(),
                dim,
                family.param_dim
            )));
        }
        for (j, m) in family.maps.iter().enumerate() {
            if m.matrix.len() != m.target.realified_dim() * family.param_dim {
                return Err(Error::Shape(format!("derivation {j} has the wrong matrix size")));
            }
        }
        Ok(Self { algebra: algebra.clone(), kind: SeminormKind::Derivation(family), split: SplitCache::default() })
    }

    pub fn algebra(&self) -> &FiniteAlgebra {
        &self.algebra
    }

    pub fn kind(&self) -> &SeminormKind {
        &self.kind
    }

    pub fn is_polyhedral(&self) -> bool {
        matches!(self.kind, SeminormKind::Polyhedral { .. })
    }

    pub fn generators(&self) -> &[Generator] {
        match &self.kind {
            SeminormKind::Polyhedral { generators } => generators,
            SeminormKind::Derivation(_) => &[],
        }
    }

    /// `s·L`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidInput(format!("scale {s} must be positive")));
        }
        let kind = match &self.kind {
            SeminormKind::Polyhedral { generators } => SeminormKind::Polyhedral {
                generators: generators.iter().map(|g| Generator { h: g.h.clone(), c: g.c / s }).collect(),
            },
            SeminormKind::Derivation(f) => SeminormKind::Derivation(DerivationFamily {
                maps: f
                    .maps
                    .iter()
                    .map(|m| DerivationMap { target: m.target.clone(), matrix: m.matrix.iter().map(|x| x * s).collect() })
                    .collect(),
                ..f.clone()
            }),
        };
        Ok(Self { algebra: self.algebra.clone(), kind, split: SplitCache::default() })
    }

    pub fn param_dim(&self) -> usize {
        match &self.kind {
            SeminormKind::Polyhedral { .. } => self.algebra.realified_dim(),
            SeminormKind::Derivation(f) => f.param_dim,
        }
    }

    /// Realified element `R β`.
    pub fn realize_params(&self, beta: &[f64]) -> Vec<f64> {
        match &self.kind {
            SeminormKind::Polyhedral { .. } => beta.to_vec(),
            SeminormKind::Derivation(f) => mat_vec(&f.realize, f.param_dim, beta),
        }
    }

    /// `Rᵀ x`.
    pub(crate) fn realize_transpose(&self, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            SeminormKind::Polyhedral { .. } => x.to_vec(),
            SeminormKind::Derivation(f) => mat_t_vec(&f.realize, f.param_dim, x),
        }
    }

    /// Rows whose joint null space is the kernel of `L` in parameter space.
    pub(crate) fn ball_rows(&self) -> Vec<Vec<f64>> {
        match &self.kind {
            SeminormKind::Polyhedral { generators } => generators.iter().map(|g| g.h.realify()).collect(),
            SeminormKind::Derivation(f) => f
                .maps
                .iter()
                .flat_map(|m| m.matrix.chunks(f.param_dim).map(|r| r.to_vec()).collect::<Vec<_>>())
                .collect(),
        }
    }

    /// Orthonormal bases of the complement of the kernel and of the kernel,
    /// in parameter space.
    pub(crate) fn kernel_split(&self) -> Split {
        self.split.0.get_or_init(|| row_space_split(&self.ball_rows(), self.param_dim(), KERNEL_REL_TOL)).clone()
    }

    /// Value of the seminorm at the element with parameters `β`.
    pub fn eval_params(&self, beta: &[f64]) -> f64 {
        match &self.kind {
            SeminormKind::Polyhedral { generators } => {
                generators.iter().map(|g| dot(&g.h.realify(), beta).abs() / g.c).fold(0.0, f64::max)
            }
            SeminormKind::Derivation(f) => {
                let norms = f.maps.iter().map(|m| derivation_norm(m, f.param_dim, beta).0);
                match f.combine {
                    Combine::Max => norms.fold(0.0, f64::max),
                    Combine::Sum => norms.sum(),
                }
            }
        }
    }

    /// A parameter vector realizing `a`. `None` when `a` lies outside the
    /// realized span; an error when the preimage is ambiguous in a way that
    /// changes the seminorm.
    pub fn params_of(&self, a: &AlgebraElement) -> Result<Option<Vec<f64>>> {
        let x = a.hermitian_part().realify();
        let f = match &self.kind {
            SeminormKind::Polyhedral { .. } => return Ok(Some(x)),
            SeminormKind::Derivation(f) => f,
        };
        let r = f.param_dim;
        let dim = self.algebra.realified_dim();
        let cols: Vec<Vec<f64>> = (0..dim).map(|i| f.realize[i * r..(i + 1) * r].to_vec()).collect();
        let (span, null) = row_space_split(&cols, r, KERNEL_REL_TOL);
        // least-squares preimage through the row space of R
        let rtx = mat_t_vec(&f.realize, r, &x);
        let mut beta = vec![0.0; r];
        for v in &span {
            let rv = mat_vec(&f.realize, r, v);
            let s = dot(&rv, &rv);
            let coef = dot(v, &rtx) / s;
            for (b, vi) in beta.iter_mut().zip(v) {
                *b += coef * vi;
            }
        }
        let back = mat_vec(&f.realize, r, &beta);
        let resid: f64 = back.iter().zip(&x).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        if resid > 1e-9 * (1.0 + norm(&x)) {
            return Ok(None);
        }
        for k in &null {
            if f.maps.iter().any(|m| derivation_norm(m, r, k).0 > 1e-9) {
                return Err(Error::Unsupported(
                    "the element has several parameter preimages with different seminorms; evaluate on parameters".into(),
                ));
            }
        }
        Ok(Some(beta))
    }
}

/// `‖δ(β)‖` and the eigenvector of largest modulus, with its block and sign.
pub(crate) fn derivation_norm(m: &DerivationMap, param_dim: usize, beta: &[f64]) -> (f64, usize, Vec<crate::numerics::C64>, f64) {
    let out = mat_vec(&m.matrix, param_dim, beta);
    let blocks = m.target.unrealify(&out);
    let mut best = (0.0, 0, Vec::new(), 1.0);
    for (b, blk) in blocks.into_iter().enumerate() {
        let d = eigh(&HermitianMatrix::new(blk).expect("realified blocks are Hermitian"));
        let lo = d.eigenvalues[0];
        let hi = *d.eigenvalues.last().unwrap();
        let (val, k, sign) = if hi.abs() >= lo.abs() { (hi.abs(), d.eigenvalues.len() - 1, hi.signum()) } else { (lo.abs(), 0, lo.signum()) };
        if val > best.0 || best.2.is_empty() {
            best = (val, b, d.vector(k), if sign == 0.0 { 1.0 } else { sign });
        }
    }
    best
}

pub(crate) fn mat_vec(m: &[f64], cols: usize, x: &[f64]) -> Vec<f64> {
    m.chunks(cols).map(|row| dot(row, x)).collect()
}

pub(crate) fn mat_t_vec(m: &[f64], cols: usize, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; cols];
    for (row, &xi) in m.chunks(cols).zip(x) {
        if xi != 0.0 {
            for (o, r) in out.iter_mut().zip(row) {
                *o += r * xi;
            }
        }
    }
    out
}

/// `L(a)`; `+∞` for elements outside the realized span of a derivation
/// seminorm.
pub fn seminorm_eval(l: &Seminorm, a: &AlgebraElement) -> Result<f64> {
    if a.algebra() != l.algebra() {
        return Err(Error::Shape("element and seminorm live in different algebras".into()));
    }
    if !a.is_hermitian(CONSTRAINT_TOL) {
        return Err(Error::NotHermitian(a.hermitian_defect()));
    }
    Ok(match l.params_of(a)? {
        Some(beta) => l.eval_params(&beta),
        None => f64::INFINITY,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    pub valid: bool,
    pub kernel_dim: usize,
    /// A self-adjoint `b` outside `ℝ·1` with `L(b) = 0`.
    pub witness: Option<AlgebraElement>,
}

/// Decides whether the null space of `L` is exactly `ℝ·1`.
pub fn kernel_check(l: &Seminorm, algebra: &FiniteAlgebra) -> Result<KernelReport> {
    if algebra != l.algebra() {
        return Err(Error::Shape("seminorm belongs to another algebra".into()));
    }
    let unit = algebra.unit_coords();
    let unit_norm = norm(&unit);
    let (_, kernel) = l.kernel_split();
    let images: Vec<Vec<f64>> = kernel.iter().map(|k| l.realize_params(k)).collect();
    let mut contains_unit = false;
    for img in &images {
        let along = dot(img, &unit) / unit_norm;
        let off: Vec<f64> = img.iter().zip(&unit).map(|(x, u)| x - along * u / unit_norm).collect();
        if norm(&off) > 1e-9 {
            return Ok(KernelReport {
                valid: false,
                kernel_dim: kernel.len(),
                witness: Some(AlgebraElement::from_realified(algebra, img)?),
            });
        }
        contains_unit |= along.abs() > 1e-9;
    }
    Ok(KernelReport { valid: contains_unit, kernel_dim: kernel.len(), witness: None })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum RhoMethod {
    ExactLp,
    CuttingPlane,
    KernelObstruction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoResult {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub method: RhoMethod,
    /// A self-adjoint `a` with `L(a) ≤ 1` attaining `lower`, or the kernel
    /// direction along which the supremum diverges.
    pub optimizer: Option<AlgebraElement>,
    /// Decomposition weights `t_k` with `μ − ν = Σ t_k h_k` (polyhedral only).
    pub certificate: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub duality_gap: f64,
    /// Upper bounds after each cutting-plane round.
    pub upper_history: Vec<f64>,
}

impl RhoResult {
    fn zero() -> Self {
        Self {
            value: 0.0,
            lower: 0.0,
            upper: 0.0,
            method: RhoMethod::ExactLp,
            optimizer: None,
            certificate: vec![],
            iterations: 0,
            converged: true,
            duality_gap: 0.0,
            upper_history: vec![],
        }
    }

    fn infinite(witness: Option<AlgebraElement>) -> Self {
        Self {
            value: f64::INFINITY,
            lower: f64::INFINITY,
            upper: f64::INFINITY,
            method: RhoMethod::KernelObstruction,
            optimizer: witness,
            certificate: vec![],
            iterations: 0,
            converged: true,
            duality_gap: 0.0,
            upper_history: vec![],
        }
    }
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// `ρ_L(μ, ν)` with the default cutting-plane settings.
pub fn rho(l: &Seminorm, mu: &State, nu: &State) -> Result<RhoResult> {
    rho_with_config(l, mu, nu, &CuttingPlaneConfig::default())
}

pub fn rho_with_config(l: &Seminorm, mu: &State, nu: &State, cfg: &CuttingPlaneConfig) -> Result<RhoResult> {
    if mu.algebra() != l.algebra() || nu.algebra() != l.algebra() {
        return Err(Error::Shape("states and seminorm live in different algebras".into()));
    }
    if mu == nu {
        return Ok(RhoResult::zero());
    }
    let (mu, nu) = if lex_cmp(&mu.realify(), &nu.realify()) == std::cmp::Ordering::Greater { (nu, mu) } else { (mu, nu) };
    let delta: Vec<f64> = mu.realify().iter().zip(nu.realify()).map(|(a, b)| a - b).collect();
    match &l.kind {
        SeminormKind::Polyhedral { generators } => rho_polyhedral(l, generators, &delta),
        SeminormKind::Derivation(_) => {
            let g = l.realize_transpose(&delta);
            let (_, kernel) = l.kernel_split();
            let scale = 1.0f64.max(norm(&g));
            if let Some(k) = kernel.iter().find(|k| dot(k, &g).abs() > 1e-9 * scale) {
                let w = AlgebraElement::from_realified(l.algebra(), &l.realize_params(k))?;
                return Ok(RhoResult::infinite(Some(w)));
            }
            let out = saddle(l, Side::Fixed(mu), Side::Fixed(nu), cfg)?;
            Ok(RhoResult {
                value: out.lower,
                lower: out.lower,
                upper: out.upper,
                method: RhoMethod::CuttingPlane,
                optimizer: Some(AlgebraElement::from_realified(l.algebra(), &out.element)?),
                certificate: vec![],
                iterations: out.iterations,
                converged: out.converged,
                duality_gap: out.upper - out.lower,
                upper_history: out.upper_history,
            })
        }
    }
}

/// `min Σ c_k |t_k|  s.t.  Σ t_k h_k = Δ`; its dual is the Lipschitz-ball
/// problem `max ⟨Δ, a⟩  s.t.  |⟨h_k, a⟩| ≤ c_k`.
fn rho_polyhedral(l: &Seminorm, generators: &[Generator], delta: &[f64]) -> Result<RhoResult> {
    let dim = delta.len();
    let mut lp = LinearProgram::new(Sense::Minimize);
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
    for g in generators {
        let h = g.h.realify();
        let tp = lp.add_nonneg(g.c);
        let tm = lp.add_nonneg(g.c);
        for (i, &hi) in h.iter().enumerate() {
            if hi != 0.0 {
                rows[i].push((tp, hi));
                rows[i].push((tm, -hi));
            }
        }
    }
    for (row, &d) in rows.into_iter().zip(delta) {
        lp.add_eq(row, d);
    }
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Infeasible => {
            let report = kernel_check(l, l.algebra())?;
            Ok(RhoResult::infinite(report.witness))
        }
        LpStatus::Unbounded => Err(Error::NumericalFailure("decomposition LP reported unbounded".into())),
        LpStatus::Optimal => {
            let t: Vec<f64> = (0..generators.len()).map(|k| sol.primal[2 * k] - sol.primal[2 * k + 1]).collect();
            let a = AlgebraElement::from_realified(l.algebra(), &sol.dual)?;
            let value = sol.objective.max(0.0);
            let gap = sol.duality_gap();
            Ok(RhoResult {
                value,
                lower: value - gap,
                upper: value + gap,
                method: RhoMethod::ExactLp,
                optimizer: Some(a),
                certificate: t,
                iterations: sol.pivots,
                converged: true,
                duality_gap: gap,
                upper_history: vec![],
            })
        }
    }
}

/// The Lipschitz seminorm of a finite metric space: one generator
/// `e_x − e_y` with weight `d(x, y)` per unordered pair.
pub fn from_metric(x: &FiniteMetricSpace) -> Result<Seminorm> {
    metric_seminorm(x, false)
}

/// Same seminorm with only the pairs that have no intermediate point on a
/// geodesic; the other pairs are implied by the triangle inequality.
pub fn from_metric_pruned(x: &FiniteMetricSpace) -> Result<Seminorm> {
    metric_seminorm(x, true)
}

fn metric_seminorm(space: &FiniteMetricSpace, prune: bool) -> Result<Seminorm> {
    let n = space.size();
    if n < 2 {
        return Err(Error::InvalidInput("a metric seminorm needs at least two points".into()));
    }
    let algebra = FiniteAlgebra::commutative(n);
    let mut gens = Vec::new();
    for x in 0..n {
        for y in x + 1..n {
            let dxy = space.dist(x, y);
            if prune && (0..n).any(|z| z != x && z != y && space.dist(x, z) + space.dist(z, y) <= dxy * (1.0 + 1e-12)) {
                continue;
            }
            let mut v = vec![0.0; n];
            v[x] = 1.0;
            v[y] = -1.0;
            gens.push((AlgebraElement::diagonal(&algebra, &v)?, dxy));
        }
    }
    Seminorm::polyhedral(&algebra, gens)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub pairs: usize,
    pub infinite: usize,
    pub nonpositive: usize,
    /// Extremes of `ρ_L(μ, ν) / ‖μ − ν‖_1` over finite pairs.
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub passed: bool,
}

/// Samples state pairs and checks that `ρ_L` is finite and positive on them.
pub fn separation_check(l: &Seminorm, algebra: &FiniteAlgebra, trials: usize, seed: u64) -> Result<SeparationReport> {
    if algebra != l.algebra() {
        return Err(Error::Shape("seminorm belongs to another algebra".into()));
    }
    let mut report = SeparationReport {
        pairs: 0,
        infinite: 0,
        nonpositive: 0,
        min_ratio: f64::INFINITY,
        max_ratio: 0.0,
        passed: true,
    };
    if algebra.unit_trace() == 1 {
        return Ok(report);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let mu = random::density(algebra, &mut rng);
        let nu = random::density(algebra, &mut rng);
        let tn = trace_norm_distance(&mu, &nu);
        if tn <= 1e-12 {
            continue;
        }
        report.pairs += 1;
        let r = rho(l, &mu, &nu)?;
        if r.value.is_infinite() {
            report.infinite += 1;
        } else if r.value <= 0.0 {
            report.nonpositive += 1;
        } else {
            let ratio = r.value / tn;
            report.min_ratio = report.min_ratio.min(ratio);
            report.max_ratio = report.max_ratio.max(ratio);
        }
    }
    report.passed = report.infinite == 0 && report.nonpositive == 0;
    Ok(report)
}

/// `‖μ − ν‖_1`, the sum of absolute eigenvalues of the difference.
pub fn trace_norm_distance(mu: &State, nu: &State) -> f64 {
    mu.blocks()
        .iter()
        .zip(nu.blocks())
        .map(|(a, b)| {
            let d = eigh(&HermitianMatrix::new((a - b).hermitian_part()).expect("difference of states"));
            d.eigenvalues.iter().map(|v| v.abs()).sum::<f64>()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::CMatrix;
    use rand::Rng;

    fn pauli(which: usize) -> CMatrix {
        use crate::numerics::cmatrix::{I, ONE, ZERO};
        match which {
            0 => CMatrix::from_row_major(2, 2, vec![ZERO, ONE, ONE, ZERO]).unwrap(),
            1 => CMatrix::from_row_major(2, 2, vec![ZERO, -I, I, ZERO]).unwrap(),
            _ => CMatrix::from_real_diag(&[1.0, -1.0]),
        }
    }

    #[test]
    fn seminorm_eval_examples() {
        let two = FiniteMetricSpace::new(vec![vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap();
        let l = from_metric(&two).unwrap();
        let a = l.algebra().clone();
        assert_eq!(seminorm_eval(&l, &a.identity()).unwrap(), 0.0);
        assert_eq!(seminorm_eval(&l, &AlgebraElement::diagonal(&a, &[0.0, 1.0]).unwrap()).unwrap(), 0.5);

        let m2 = FiniteAlgebra::matrix(2);
        let d = AlgebraElement::new(&m2, vec![CMatrix::from_real_diag(&[0.0, 1.0])]).unwrap();
        let l = Seminorm::commutator(&m2, &[d], Combine::Max).unwrap();
        let sx = AlgebraElement::new(&m2, vec![pauli(0)]).unwrap();
        assert!((seminorm_eval(&l, &sx).unwrap() - 1.0).abs() < 1e-12);
        assert!(seminorm_eval(&l, &m2.identity()).unwrap() < 1e-15);
    }

    #[test]
    fn kernel_check_examples() {
        let three = FiniteMetricSpace::new(vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]]).unwrap();
        let l = from_metric(&three).unwrap();
        assert!(kernel_check(&l, l.algebra()).unwrap().valid);

        let m2 = FiniteAlgebra::matrix(2);
        let d = AlgebraElement::new(&m2, vec![CMatrix::from_real_diag(&[0.0, 1.0])]).unwrap();
        let l = Seminorm::commutator(&m2, &[d], Combine::Max).unwrap();
        let rep = kernel_check(&l, &m2).unwrap();
        assert!(!rep.valid);
        let w = rep.witness.unwrap();
        assert!(seminorm_eval(&l, &w).unwrap() < 1e-12);
        assert!(w.scalar_value(1e-9).is_none());
        assert!(w.block(0)[(0, 1)].norm() < 1e-12);

        let c2 = FiniteAlgebra::commutative(2);
        let l = Seminorm::polyhedral(&c2, vec![]).unwrap();
        let rep = kernel_check(&l, &c2).unwrap();
        assert!(!rep.valid);
        let w = rep.witness.unwrap();
        assert!(w.scalar_value(1e-9).is_none());
    }

    #[test]
    fn polyhedral_rho_on_points() {
        let three = FiniteMetricSpace::new(vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]]).unwrap();
        let l = from_metric(&three).unwrap();
        let a = l.algebra().clone();
        for x in 0..3 {
            for y in 0..3 {
                let r = rho(&l, &State::point_mass(&a, x).unwrap(), &State::point_mass(&a, y).unwrap()).unwrap();
                assert!((r.value - three.dist(x, y)).abs() < 1e-9);
                assert!(r.duality_gap < 1e-9);
            }
        }
        let mu = State::point_mass(&a, 0).unwrap();
        let nu = State::from_weights(&a, &[0.0, 0.5, 0.5]).unwrap();
        let r = rho(&l, &mu, &nu).unwrap();
        assert!((r.value - 1.5).abs() < 1e-9);
        let opt = r.optimizer.unwrap();
        assert!(seminorm_eval(&l, &opt).unwrap() <= 1.0 + 1e-9);
        assert!(((mu.expect(&opt) - nu.expect(&opt)).re.abs() - 1.5).abs() < 1e-9);
    }

    #[test]
    fn derivation_rho_closed_form() {
        // With D = σx, L(xσx + yσy + zσz) = 2√(y² + z²).
        let m2 = FiniteAlgebra::matrix(2);
        let d = AlgebraElement::new(&m2, vec![pauli(0)]).unwrap();
        let l = Seminorm::commutator(&m2, &[d], Combine::Max).unwrap();
        let bloch = |x: f64, y: f64, z: f64| {
            let m = &(&CMatrix::identity(2) + &pauli(0).scale_real(x)) + &(&pauli(1).scale_real(y) + &pauli(2).scale_real(z));
            State::new(&m2, vec![m.scale_real(0.5)]).unwrap()
        };
        let mu = bloch(0.2, 0.5, -0.3);
        let nu = bloch(0.2, -0.1, 0.4);
        let r = rho(&l, &mu, &nu).unwrap();
        // Δ = (δy σy + δz σz)/2, a = yσy + zσz: ⟨Δ, a⟩ = δy·y + δz·z over y²+z² ≤ 1/4
        let expect = 0.5 * ((0.6f64).powi(2) + (0.7f64).powi(2)).sqrt();
        assert!(r.lower <= expect + 1e-9 && expect <= r.upper + 1e-9, "{r:?}");
        assert!((r.value - expect).abs() <= 1e-4 * expect, "{} vs {}", r.value, expect);
        for w in r.upper_history.windows(2) {
            assert!(w[1] <= w[0]);
        }

        let off = bloch(0.6, -0.1, 0.4);
        assert!(rho(&l, &mu, &off).unwrap().value.is_infinite());
    }

    #[test]
    fn pruning_keeps_the_seminorm() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = FiniteMetricSpace::random_euclidean(6, &mut rng);
        let full = from_metric(&x).unwrap();
        let pruned = from_metric_pruned(&x).unwrap();
        assert!(pruned.generators().len() <= full.generators().len());
        for _ in 0..20 {
            let f: Vec<f64> = (0..6).map(|_| rng.random::<f64>()).collect();
            let e = AlgebraElement::diagonal(full.algebra(), &f).unwrap();
            let a = seminorm_eval(&full, &e).unwrap();
            let b = seminorm_eval(&pruned, &e).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn separation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = FiniteMetricSpace::random_euclidean(4, &mut rng);
        let l = from_metric(&x).unwrap();
        let rep = separation_check(&l, l.algebra(), 10, 1).unwrap();
        assert!(rep.passed && rep.pairs == 10);

        let c2 = FiniteAlgebra::commutative(2);
        let l = Seminorm::polyhedral(&c2, vec![]).unwrap();
        let rep = separation_check(&l, &c2, 5, 1).unwrap();
        assert!(!rep.passed && rep.infinite == 5);

        let c1 = FiniteAlgebra::commutative(1);
        let l = Seminorm::polyhedral(&c1, vec![]).unwrap();
        let rep = separation_check(&l, &c1, 5, 1).unwrap();
        assert!(rep.passed && rep.pairs == 0);
    }
}
