//! Finite-dimensional C*-algebras `M_{n_1} ⊕ … ⊕ M_{n_B}`, their states,
//! projections, and the convex state sets built from them.
//!
//! A state is a block-diagonal density matrix paired with elements by the
//! trace. A projection `p` determines the face `F_p = {μ : μ(p) = 1}`; a
//! moment set fixes the expectations of a list of elements. Moment sets are
//! reduced to faces where their constraints force it (see
//! [`StateSet::resolve`]).

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::cmatrix::{norm as cnorm, ONE, ZERO};
use crate::numerics::{eigh, realify_hermitian, unrealify_hermitian, CMatrix, HermitianMatrix, C64};

/// Eigenvalue floor for positivity.
pub const PSD_TOL: f64 = 1e-10;
/// Tolerance on traces, idempotency and moment constraints.
pub const CONSTRAINT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FiniteAlgebra {
    blocks: Vec<usize>,
}

impl FiniteAlgebra {
    pub fn new(blocks: Vec<usize>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidInput("an algebra needs at least one block".into()));
        }
        if blocks.contains(&0) {
            return Err(Error::InvalidInput("block sizes must be positive".into()));
        }
        Ok(Self { blocks })
    }

    /// `C^n`, the functions on an `n`-point space.
    pub fn commutative(n: usize) -> Self {
        Self { blocks: vec![1; n.max(1)] }
    }

    pub fn matrix(n: usize) -> Self {
        Self { blocks: vec![n.max(1)] }
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_commutative(&self) -> bool {
        self.blocks.iter().all(|&n| n == 1)
    }

    /// Real dimension of the self-adjoint part, `Σ n_i²`.
    pub fn realified_dim(&self) -> usize {
        self.blocks.iter().map(|n| n * n).sum()
    }

    pub fn block_offset(&self, block: usize) -> usize {
        self.blocks[..block].iter().map(|n| n * n).sum()
    }

    /// Trace of the unit, `Σ n_i`.
    pub fn unit_trace(&self) -> usize {
        self.blocks.iter().sum()
    }

    pub fn identity(&self) -> AlgebraElement {
        AlgebraElement { algebra: self.clone(), blocks: self.blocks.iter().map(|&n| CMatrix::identity(n)).collect() }
    }

    pub fn zero(&self) -> AlgebraElement {
        AlgebraElement { algebra: self.clone(), blocks: self.blocks.iter().map(|&n| CMatrix::zeros(n, n)).collect() }
    }

    pub fn check_shapes(&self, blocks: &[CMatrix]) -> Result<()> {
        if blocks.len() != self.blocks.len() {
            return Err(Error::Shape(format!("expected {} blocks, got {}", self.blocks.len(), blocks.len())));
        }
        for (i, (m, &n)) in blocks.iter().zip(&self.blocks).enumerate() {
            if m.rows() != n || m.cols() != n {
                return Err(Error::Shape(format!("block {i} is {}x{}, expected {n}x{n}", m.rows(), m.cols())));
            }
        }
        Ok(())
    }

    pub fn realify(&self, blocks: &[CMatrix]) -> Vec<f64> {
        blocks.iter().flat_map(realify_hermitian).collect()
    }

    pub fn unrealify(&self, coords: &[f64]) -> Vec<CMatrix> {
        assert_eq!(coords.len(), self.realified_dim());
        let mut out = Vec::with_capacity(self.blocks.len());
        let mut off = 0;
        for &n in &self.blocks {
            out.push(unrealify_hermitian(n, &coords[off..off + n * n]));
            off += n * n;
        }
        out
    }

    /// Realified coordinates of the rank-one element `x x*` placed in `block`.
    pub fn embed_outer(&self, block: usize, x: &[C64]) -> Vec<f64> {
        let mut out = vec![0.0; self.realified_dim()];
        let off = self.block_offset(block);
        let local = realify_hermitian(&CMatrix::outer(x, x));
        out[off..off + local.len()].copy_from_slice(&local);
        out
    }

    /// Realified identity.
    pub fn unit_coords(&self) -> Vec<f64> {
        self.realify(&self.identity().blocks)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgebraElement {
    algebra: FiniteAlgebra,
    blocks: Vec<CMatrix>,
}

impl AlgebraElement {
    pub fn new(algebra: &FiniteAlgebra, blocks: Vec<CMatrix>) -> Result<Self> {
        algebra.check_shapes(&blocks)?;
        Ok(Self { algebra: algebra.clone(), blocks })
    }

    /// Function on the points of a commutative algebra.
    pub fn diagonal(algebra: &FiniteAlgebra, values: &[f64]) -> Result<Self> {
        if !algebra.is_commutative() || values.len() != algebra.num_blocks() {
            return Err(Error::Shape(format!(
                "{} values for a {:?} algebra; diagonal elements need a commutative algebra",
                values.len(),
                algebra.blocks()
            )));
        }
        Ok(Self { algebra: algebra.clone(), blocks: values.iter().map(|&v| CMatrix::from_real_diag(&[v])).collect() })
    }

    pub fn from_realified(algebra: &FiniteAlgebra, coords: &[f64]) -> Result<Self> {
        if coords.len() != algebra.realified_dim() {
            return Err(Error::Shape(format!("{} coordinates, expected {}", coords.len(), algebra.realified_dim())));
        }
        Ok(Self { algebra: algebra.clone(), blocks: algebra.unrealify(coords) })
    }

    pub fn algebra(&self) -> &FiniteAlgebra {
        &self.algebra
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &CMatrix {
        &self.blocks[i]
    }

    pub fn hermitian_defect(&self) -> f64 {
        self.blocks.iter().map(|b| b.hermitian_defect()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol
    }

    pub fn adjoint(&self) -> Self {
        self.map(|b| b.adjoint())
    }

    pub fn hermitian_part(&self) -> Self {
        self.map(|b| b.hermitian_part())
    }

    pub fn skew_part(&self) -> Self {
        self.map(|b| b.skew_part())
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|b| b.scale_real(s))
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        self.map(|b| b.scale(s))
    }

    fn map(&self, f: impl Fn(&CMatrix) -> CMatrix) -> Self {
        Self { algebra: self.algebra.clone(), blocks: self.blocks.iter().map(f).collect() }
    }

    fn zip(&self, other: &Self, f: impl Fn(&CMatrix, &CMatrix) -> CMatrix) -> Result<Self> {
        if self.algebra != other.algebra {
            return Err(Error::Shape("elements live in different algebras".into()));
        }
        Ok(Self { algebra: self.algebra.clone(), blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| f(a, b)).collect() })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a * b)
    }

    pub fn add_scalar(&self, s: f64) -> Self {
        self.add(&self.algebra.identity().scale(s)).expect("same algebra")
    }

    /// Realified coordinates of the Hermitian part.
    pub fn realify(&self) -> Vec<f64> {
        self.algebra.realify(&self.blocks)
    }

    /// `Re Σ_i tr(a_i b_i)`.
    pub fn pairing(&self, other: &Self) -> f64 {
        self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.trace_pairing(b)).sum()
    }

    /// Operator norm of a Hermitian element.
    pub fn hermitian_norm(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| eigh(&HermitianMatrix::new(b.hermitian_part()).expect("hermitian part")).spectral_radius())
            .fold(0.0, f64::max)
    }

    /// `Some(λ)` when the element equals `λ·1` within `tol`.
    pub fn scalar_value(&self, tol: f64) -> Option<C64> {
        let lambda = self.blocks[0][(0, 0)];
        let target = self.algebra.identity().scale_complex(lambda);
        let diff = self.sub(&target).ok()?;
        diff.blocks.iter().all(|b| b.max_abs() <= tol).then_some(lambda)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.max_abs_diff(b)).fold(0.0, f64::max)
    }
}

/// Outcome of a state-validity check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateDiagnostics {
    pub valid: bool,
    pub hermitian_defect: f64,
    pub min_eigenvalue: f64,
    pub trace: f64,
}

/// Checks positivity and unit trace of a candidate block density matrix.
pub fn is_state(algebra: &FiniteAlgebra, blocks: &[CMatrix]) -> Result<StateDiagnostics> {
    algebra.check_shapes(blocks)?;
    let hermitian_defect = blocks.iter().map(|b| b.hermitian_defect()).fold(0.0, f64::max);
    let mut min_eigenvalue = f64::INFINITY;
    let mut trace = 0.0;
    for b in blocks {
        let h = HermitianMatrix::new(b.hermitian_part()).expect("hermitian part is Hermitian");
        min_eigenvalue = min_eigenvalue.min(eigh(&h).eigenvalues[0]);
        trace += b.trace().re;
    }
    let valid = hermitian_defect <= CONSTRAINT_TOL && min_eigenvalue >= -PSD_TOL && (trace - 1.0).abs() <= PSD_TOL;
    Ok(StateDiagnostics { valid, hermitian_defect, min_eigenvalue, trace })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct State {
    algebra: FiniteAlgebra,
    blocks: Vec<CMatrix>,
}

impl State {
    pub fn new(algebra: &FiniteAlgebra, blocks: Vec<CMatrix>) -> Result<Self> {
        let diag = is_state(algebra, &blocks)?;
        if !diag.valid {
            return Err(Error::InvalidInput(format!(
                "not a state: min eigenvalue {:e}, trace {}, hermitian defect {:e}",
                diag.min_eigenvalue, diag.trace, diag.hermitian_defect
            )));
        }
        Ok(Self { algebra: algebra.clone(), blocks: blocks.iter().map(|b| b.hermitian_part()).collect() })
    }

    /// Wraps blocks already known to form a state.
    pub(crate) fn from_blocks_unchecked(algebra: &FiniteAlgebra, blocks: Vec<CMatrix>) -> Self {
        Self { algebra: algebra.clone(), blocks }
    }

    pub fn from_realified(algebra: &FiniteAlgebra, coords: &[f64]) -> Result<Self> {
        Self::new(algebra, algebra.unrealify(coords))
    }

    /// Probability vector on a commutative algebra.
    pub fn from_weights(algebra: &FiniteAlgebra, weights: &[f64]) -> Result<Self> {
        let e = AlgebraElement::diagonal(algebra, weights)?;
        Self::new(algebra, e.blocks)
    }

    pub fn point_mass(algebra: &FiniteAlgebra, point: usize) -> Result<Self> {
        let mut w = vec![0.0; algebra.num_blocks()];
        *w.get_mut(point).ok_or_else(|| Error::Shape(format!("point {point} out of range")))? = 1.0;
        Self::from_weights(algebra, &w)
    }

    /// The vector state `x x* / |x|²` placed in `block`.
    pub fn pure(algebra: &FiniteAlgebra, block: usize, x: &[C64]) -> Result<Self> {
        if block >= algebra.num_blocks() || x.len() != algebra.blocks()[block] {
            return Err(Error::Shape("pure state vector does not fit the block".into()));
        }
        let nx = cnorm(x);
        if nx == 0.0 {
            return Err(Error::InvalidInput("zero vector".into()));
        }
        let unit: Vec<C64> = x.iter().map(|z| z / nx).collect();
        let mut blocks: Vec<CMatrix> = algebra.blocks().iter().map(|&n| CMatrix::zeros(n, n)).collect();
        blocks[block] = CMatrix::outer(&unit, &unit);
        Ok(Self { algebra: algebra.clone(), blocks })
    }

    pub fn maximally_mixed(algebra: &FiniteAlgebra) -> Self {
        let t = algebra.unit_trace() as f64;
        Self { algebra: algebra.clone(), blocks: algebra.identity().scale(1.0 / t).blocks }
    }

    pub fn algebra(&self) -> &FiniteAlgebra {
        &self.algebra
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    /// `μ(a) = Σ_i tr(ρ_i a_i)`.
    pub fn expect(&self, a: &AlgebraElement) -> C64 {
        self.blocks.iter().zip(a.blocks()).map(|(r, x)| (r * x).trace()).sum()
    }

    pub fn realify(&self) -> Vec<f64> {
        self.algebra.realify(&self.blocks)
    }

    pub fn max_abs_diff(&self, other: &State) -> f64 {
        self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.max_abs_diff(b)).fold(0.0, f64::max)
    }

    pub fn rank(&self) -> usize {
        self.blocks
            .iter()
            .map(|b| {
                let d = eigh(&HermitianMatrix::new(b.clone()).expect("state block"));
                d.eigenvalues.iter().filter(|&&v| v > 1e-9).count()
            })
            .sum()
    }

    /// Convex combination `t·self + (1-t)·other`.
    pub fn mix(&self, other: &State, t: f64) -> State {
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| &a.scale_real(t) + &b.scale_real(1.0 - t))
            .collect();
        State { algebra: self.algebra.clone(), blocks }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    algebra: FiniteAlgebra,
    blocks: Vec<CMatrix>,
}

impl Projection {
    pub fn new(algebra: &FiniteAlgebra, blocks: Vec<CMatrix>) -> Result<Self> {
        algebra.check_shapes(&blocks)?;
        for (i, p) in blocks.iter().enumerate() {
            let defect = p.hermitian_defect().max((p * p).max_abs_diff(p));
            if defect > CONSTRAINT_TOL {
                return Err(Error::InvalidInput(format!("block {i} is not a projection (defect {defect:e})")));
            }
        }
        Ok(Self { algebra: algebra.clone(), blocks: blocks.iter().map(|b| b.hermitian_part()).collect() })
    }

    pub fn identity(algebra: &FiniteAlgebra) -> Self {
        Self { algebra: algebra.clone(), blocks: algebra.identity().blocks }
    }

    /// Indicator of a subset of points of a commutative algebra.
    pub fn indicator(algebra: &FiniteAlgebra, members: &[bool]) -> Result<Self> {
        let values: Vec<f64> = members.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
        let e = AlgebraElement::diagonal(algebra, &values)?;
        Self::new(algebra, e.blocks)
    }

    /// Orthogonal projection onto the span of `x` inside `block`.
    pub fn rank_one(algebra: &FiniteAlgebra, block: usize, x: &[C64]) -> Result<Self> {
        Ok(Self { algebra: algebra.clone(), blocks: State::pure(algebra, block, x)?.blocks })
    }

    /// Projection onto the span of orthonormal columns, block by block.
    pub(crate) fn from_isometries(algebra: &FiniteAlgebra, parts: &[FacePart]) -> Self {
        let mut blocks: Vec<CMatrix> = algebra.blocks().iter().map(|&n| CMatrix::zeros(n, n)).collect();
        for part in parts {
            blocks[part.block] = &blocks[part.block] + &(&part.isometry * &part.isometry.adjoint());
        }
        Self { algebra: algebra.clone(), blocks }
    }

    pub fn algebra(&self) -> &FiniteAlgebra {
        &self.algebra
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn as_element(&self) -> AlgebraElement {
        AlgebraElement { algebra: self.algebra.clone(), blocks: self.blocks.clone() }
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.trace().re.round() as usize).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.iter().all(|b| b.max_abs() <= CONSTRAINT_TOL)
    }

    /// `p <= q`, i.e. `pq = p`.
    pub fn le(&self, q: &Projection) -> bool {
        self.blocks.iter().zip(&q.blocks).all(|(p, q)| (p * q).max_abs_diff(p) <= CONSTRAINT_TOL)
    }

    /// Orthonormal bases of the ranges, one per nonzero block.
    pub fn range_parts(&self) -> Vec<FacePart> {
        let mut parts = Vec::new();
        for (block, p) in self.blocks.iter().enumerate() {
            let d = eigh(&HermitianMatrix::new(p.clone()).expect("projection block"));
            let cols: Vec<Vec<C64>> = (0..p.rows()).filter(|&k| d.eigenvalues[k] > 0.5).map(|k| d.vector(k)).collect();
            if !cols.is_empty() {
                parts.push(FacePart { block, isometry: CMatrix::from_columns(p.rows(), &cols) });
            }
        }
        parts
    }
}

/// One block of a face: the state support is the range of `isometry`.
#[derive(Clone, Debug, PartialEq)]
pub struct FacePart {
    pub block: usize,
    pub isometry: CMatrix,
}

impl FacePart {
    pub fn rank(&self) -> usize {
        self.isometry.cols()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum StateSetKind {
    Face(Projection),
    Moment { constraints: Vec<AlgebraElement>, targets: Vec<C64> },
}

/// A convex set of states, given intensionally.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSet {
    algebra: FiniteAlgebra,
    kind: StateSetKind,
}

/// An equality `μ(h) = target` that survives facial reduction, compressed to
/// the parts of the face.
#[derive(Clone, Debug)]
pub struct ResidualConstraint {
    pub compressed: Vec<CMatrix>,
    pub target: f64,
}

/// A state set written as a face (blocks and ranges) with possible extra
/// equality constraints on the face.
#[derive(Clone, Debug)]
pub struct ResolvedSet {
    pub algebra: FiniteAlgebra,
    pub parts: Vec<FacePart>,
    pub residual: Vec<ResidualConstraint>,
}

impl StateSet {
    /// `F_p = {μ : μ(p) = 1}`.
    pub fn face_from_projection(p: &Projection) -> Result<Self> {
        if p.is_zero() {
            return Err(Error::EmptySet("the face of the zero projection is empty".into()));
        }
        Ok(Self { algebra: p.algebra.clone(), kind: StateSetKind::Face(p.clone()) })
    }

    /// `F_z = {μ : μ(c) = z(c) for c in the basis}`.
    pub fn face_from_character(algebra: &FiniteAlgebra, basis: Vec<AlgebraElement>, values: Vec<C64>) -> Result<Self> {
        if basis.len() != values.len() {
            return Err(Error::Shape(format!("{} basis elements but {} values", basis.len(), values.len())));
        }
        for (c, z) in basis.iter().zip(&values) {
            if c.algebra() != algebra {
                return Err(Error::Shape("basis element from another algebra".into()));
            }
            if let Some(lambda) = c.scalar_value(CONSTRAINT_TOL) {
                if (lambda - z).norm() > CONSTRAINT_TOL {
                    return Err(Error::InvalidInput(format!(
                        "character must be unital: value {z} on the scalar {lambda}"
                    )));
                }
            }
        }
        Ok(Self { algebra: algebra.clone(), kind: StateSetKind::Moment { constraints: basis, targets: values } })
    }

    /// Moment set without the unitality check.
    pub fn moment(algebra: &FiniteAlgebra, constraints: Vec<AlgebraElement>, targets: Vec<C64>) -> Result<Self> {
        if constraints.len() != targets.len() {
            return Err(Error::Shape("constraint and target counts differ".into()));
        }
        if constraints.iter().any(|c| c.algebra() != algebra) {
            return Err(Error::Shape("constraint from another algebra".into()));
        }
        Ok(Self { algebra: algebra.clone(), kind: StateSetKind::Moment { constraints, targets } })
    }

    pub fn whole(algebra: &FiniteAlgebra) -> Self {
        Self { algebra: algebra.clone(), kind: StateSetKind::Face(Projection::identity(algebra)) }
    }

    pub fn algebra(&self) -> &FiniteAlgebra {
        &self.algebra
    }

    pub fn kind(&self) -> &StateSetKind {
        &self.kind
    }

    pub fn contains(&self, state: &State) -> bool {
        if state.algebra() != &self.algebra {
            return false;
        }
        match &self.kind {
            StateSetKind::Face(p) => state
                .blocks()
                .iter()
                .zip(p.blocks())
                .all(|(r, p)| (&(p * r) * p).max_abs_diff(r) <= CONSTRAINT_TOL),
            StateSetKind::Moment { constraints, targets } => {
                constraints.iter().zip(targets).all(|(c, z)| (state.expect(c) - z).norm() <= CONSTRAINT_TOL)
            }
        }
    }

    /// Seeded isotropic pure states of a face.
    pub fn sample_extreme_states(&self, count: usize, seed: u64) -> Result<Vec<State>> {
        match &self.kind {
            StateSetKind::Face(p) => {
                let resolved = ResolvedSet { algebra: self.algebra.clone(), parts: p.range_parts(), residual: vec![] };
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Ok((0..count).map(|_| resolved.sample_pure(&mut rng)).collect())
            }
            StateSetKind::Moment { .. } => {
                Err(Error::Unsupported("extreme points of a moment set are not parameterized".into()))
            }
        }
    }

    /// Numbers identifying the set's representation; used to orient symmetric
    /// computations canonically.
    pub fn fingerprint(&self) -> Vec<f64> {
        match &self.kind {
            StateSetKind::Face(p) => {
                let mut v = vec![0.0];
                v.extend(self.algebra.realify(p.blocks()));
                v
            }
            StateSetKind::Moment { constraints, targets } => {
                let mut v = vec![1.0];
                for (c, z) in constraints.iter().zip(targets) {
                    v.extend(c.hermitian_part().realify());
                    v.extend(c.skew_part().realify());
                    v.push(z.re);
                    v.push(z.im);
                }
                v
            }
        }
    }

    /// Writes the set as a face plus residual constraints. Constraints whose
    /// target sits at an extreme eigenvalue of the constraint (compressed to
    /// the current face) force the support into that eigenspace; constraints
    /// that are constant on the face are dropped.
    pub fn resolve(&self) -> Result<ResolvedSet> {
        let (constraints, targets) = match &self.kind {
            StateSetKind::Face(p) => {
                return Ok(ResolvedSet { algebra: self.algebra.clone(), parts: p.range_parts(), residual: vec![] })
            }
            StateSetKind::Moment { constraints, targets } => (constraints, targets),
        };
        let mut hermitian: Vec<(AlgebraElement, f64)> = Vec::new();
        for (c, z) in constraints.iter().zip(targets) {
            if c.is_hermitian(CONSTRAINT_TOL) {
                if z.im.abs() > CONSTRAINT_TOL {
                    return Ok(ResolvedSet::empty(&self.algebra));
                }
                hermitian.push((c.hermitian_part(), z.re));
                continue;
            }
            hermitian.push((c.hermitian_part(), z.re));
            hermitian.push((c.skew_part(), z.im));
            let normal = c.mul(&c.adjoint())?.max_abs_diff(&c.adjoint().mul(c)?) <= CONSTRAINT_TOL;
            if normal && z.norm() > CONSTRAINT_TOL {
                // Re(z̄ c / |z|) attains |z| only on the eigenspace of z when z is extreme
                let phase = z.conj() / z.norm();
                hermitian.push((c.scale_complex(phase).hermitian_part(), z.norm()));
            }
        }

        let mut parts: Vec<FacePart> = self
            .algebra
            .blocks()
            .iter()
            .enumerate()
            .map(|(block, &n)| FacePart { block, isometry: CMatrix::identity(n) })
            .collect();
        loop {
            let mut changed = false;
            let mut kept = Vec::new();
            for (h, t) in hermitian.drain(..) {
                if parts.is_empty() {
                    break;
                }
                let decs: Vec<_> = parts.iter().map(|p| eigh(&compress(&h, p))).collect();
                let lo = decs.iter().map(|d| d.eigenvalues[0]).fold(f64::INFINITY, f64::min);
                let hi = decs.iter().map(|d| *d.eigenvalues.last().unwrap()).fold(f64::NEG_INFINITY, f64::max);
                if t < lo - CONSTRAINT_TOL || t > hi + CONSTRAINT_TOL {
                    return Ok(ResolvedSet::empty(&self.algebra));
                }
                if hi - lo <= CONSTRAINT_TOL {
                    continue;
                }
                let keep_top = t >= hi - CONSTRAINT_TOL;
                let keep_bottom = t <= lo + CONSTRAINT_TOL;
                if !(keep_top || keep_bottom) {
                    kept.push((h, t));
                    continue;
                }
                let mut next = Vec::new();
                for (p, d) in parts.iter().zip(&decs) {
                    let cols: Vec<Vec<C64>> = (0..p.rank())
                        .filter(|&k| {
                            let v = d.eigenvalues[k];
                            if keep_top {
                                v >= hi - CONSTRAINT_TOL
                            } else {
                                v <= lo + CONSTRAINT_TOL
                            }
                        })
                        .map(|k| p.isometry.mul_vec(&d.vector(k)))
                        .collect();
                    if !cols.is_empty() {
                        next.push(FacePart { block: p.block, isometry: CMatrix::from_columns(p.isometry.rows(), &cols) });
                    }
                }
                parts = next;
                changed = true;
            }
            hermitian = kept;
            if !changed || parts.is_empty() {
                break;
            }
        }
        let residual = hermitian
            .iter()
            .map(|(h, t)| ResidualConstraint { compressed: parts.iter().map(|p| compress(h, p).into_matrix()).collect(), target: *t })
            .collect();
        Ok(ResolvedSet { algebra: self.algebra.clone(), parts, residual })
    }
}

/// `V* h V` for the part's isometry `V`.
pub(crate) fn compress(h: &AlgebraElement, part: &FacePart) -> HermitianMatrix {
    let v = &part.isometry;
    let m = &(&v.adjoint() * h.block(part.block)) * v;
    HermitianMatrix::new(m.hermitian_part()).expect("compression of a Hermitian element")
}

impl ResolvedSet {
    pub fn empty(algebra: &FiniteAlgebra) -> Self {
        Self { algebra: algebra.clone(), parts: vec![], residual: vec![] }
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn is_face(&self) -> bool {
        self.residual.is_empty()
    }

    pub fn projection(&self) -> Projection {
        Projection::from_isometries(&self.algebra, &self.parts)
    }

    pub fn total_rank(&self) -> usize {
        self.parts.iter().map(|p| p.rank()).sum()
    }

    /// The pure state of the unit vector `x` in the range of `part`.
    pub fn pure_state(&self, part: usize, x: &[C64]) -> State {
        let p = &self.parts[part];
        let y = p.isometry.mul_vec(x);
        State::pure(&self.algebra, p.block, &y).expect("vector fits the block")
    }

    /// Finitely many extreme points when every part has rank one.
    pub fn finite_extreme_points(&self) -> Option<Vec<State>> {
        if !self.is_face() || self.parts.iter().any(|p| p.rank() != 1) {
            return None;
        }
        Some((0..self.parts.len()).map(|k| self.pure_state(k, &[ONE])).collect())
    }

    /// Pure state drawn with the part chosen proportionally to its rank and a
    /// normalized complex Gaussian vector inside it.
    pub fn sample_pure(&self, rng: &mut impl Rng) -> State {
        let total = self.total_rank();
        let mut pick = rng.random_range(0..total);
        let mut part = 0;
        while pick >= self.parts[part].rank() {
            pick -= self.parts[part].rank();
            part += 1;
        }
        let r = self.parts[part].rank();
        let mut x: Vec<C64> = vec![ZERO; r];
        loop {
            for z in x.iter_mut() {
                *z = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            }
            if cnorm(&x) > 1e-8 {
                break;
            }
        }
        self.pure_state(part, &x)
    }

    /// Uniform mixture over the face, a relative-interior point when there
    /// are no residual constraints.
    pub fn center(&self) -> State {
        let total = self.total_rank() as f64;
        let mut blocks: Vec<CMatrix> = self.algebra.blocks().iter().map(|&n| CMatrix::zeros(n, n)).collect();
        for p in &self.parts {
            blocks[p.block] = &blocks[p.block] + &(&p.isometry * &p.isometry.adjoint()).scale_real(1.0 / total);
        }
        State::from_blocks_unchecked(&self.algebra, blocks)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m2() -> FiniteAlgebra {
        FiniteAlgebra::matrix(2)
    }

    #[test]
    fn is_state_examples() {
        let a = m2();
        assert!(is_state(&a, &[CMatrix::from_real_diag(&[0.5, 0.5])]).unwrap().valid);
        assert!(!is_state(&a, &[CMatrix::from_real_diag(&[1.2, -0.2])]).unwrap().valid);
        assert!(!is_state(&a, &[CMatrix::from_real_diag(&[0.3, 0.3])]).unwrap().valid);
        assert!(matches!(is_state(&a, &[CMatrix::from_real_diag(&[1.0])]), Err(Error::Shape(_))));
    }

    #[test]
    fn full_face_contains_everything() {
        let a = m2();
        let f = StateSet::face_from_projection(&Projection::identity(&a)).unwrap();
        assert!(f.contains(&State::maximally_mixed(&a)));
        assert!(f.contains(&State::pure(&a, 0, &[ONE, C64::new(0.0, 1.0)]).unwrap()));
    }

    #[test]
    fn rank_one_face_is_a_singleton() {
        let a = m2();
        let p = Projection::new(&a, vec![CMatrix::from_real_diag(&[1.0, 0.0])]).unwrap();
        let f = StateSet::face_from_projection(&p).unwrap();
        assert!(f.contains(&State::new(&a, vec![CMatrix::from_real_diag(&[1.0, 0.0])]).unwrap()));
        assert!(!f.contains(&State::maximally_mixed(&a)));
        assert!(!f.contains(&State::pure(&a, 0, &[ONE, ONE]).unwrap()));
    }

    #[test]
    fn commutative_face_is_support_condition() {
        let a = FiniteAlgebra::commutative(3);
        let p = Projection::indicator(&a, &[true, true, false]).unwrap();
        let f = StateSet::face_from_projection(&p).unwrap();
        assert!(f.contains(&State::from_weights(&a, &[0.3, 0.7, 0.0]).unwrap()));
        assert!(!f.contains(&State::from_weights(&a, &[0.3, 0.6, 0.1]).unwrap()));
    }

    #[test]
    fn zero_projection_is_empty() {
        let a = m2();
        let p = Projection::new(&a, vec![CMatrix::zeros(2, 2)]).unwrap();
        assert!(matches!(StateSet::face_from_projection(&p), Err(Error::EmptySet(_))));
    }

    #[test]
    fn character_faces() {
        let a = m2();
        let whole = StateSet::face_from_character(&a, vec![a.identity()], vec![ONE]).unwrap();
        let r = whole.resolve().unwrap();
        assert_eq!(r.total_rank(), 2);
        assert!(r.is_face());

        let z = AlgebraElement::new(&a, vec![CMatrix::from_real_diag(&[1.0, -1.0])]).unwrap();
        let s = StateSet::face_from_character(&a, vec![a.identity(), z], vec![ONE, ONE]).unwrap();
        let r = s.resolve().unwrap();
        assert!(r.is_face());
        let pts = r.finite_extreme_points().unwrap();
        assert_eq!(pts.len(), 1);
        assert!(pts[0].blocks()[0].max_abs_diff(&CMatrix::from_real_diag(&[1.0, 0.0])) < 1e-12);

        let c2 = FiniteAlgebra::commutative(2);
        let e0 = AlgebraElement::diagonal(&c2, &[1.0, 0.0]).unwrap();
        let e1 = AlgebraElement::diagonal(&c2, &[0.0, 1.0]).unwrap();
        let s = StateSet::face_from_character(&c2, vec![e0, e1], vec![ONE, ZERO]).unwrap();
        let pts = s.resolve().unwrap().finite_extreme_points().unwrap();
        assert_eq!(pts.len(), 1);
        assert!((pts[0].expect(&AlgebraElement::diagonal(&c2, &[1.0, 0.0]).unwrap()).re - 1.0).abs() < 1e-12);

        assert!(matches!(
            StateSet::face_from_character(&a, vec![a.identity()], vec![C64::new(2.0, 0.0)]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn infeasible_moment_set_resolves_empty() {
        let a = m2();
        let z = AlgebraElement::new(&a, vec![CMatrix::from_real_diag(&[1.0, -1.0])]).unwrap();
        let s = StateSet::moment(&a, vec![z], vec![C64::new(2.0, 0.0)]).unwrap();
        assert!(s.resolve().unwrap().is_empty());
    }

    #[test]
    fn sampled_extreme_states() {
        let a = m2();
        let p = Projection::new(&a, vec![CMatrix::from_real_diag(&[1.0, 0.0])]).unwrap();
        let f = StateSet::face_from_projection(&p).unwrap();
        for s in f.sample_extreme_states(5, 1).unwrap() {
            assert!(s.blocks()[0].max_abs_diff(&CMatrix::from_real_diag(&[1.0, 0.0])) < 1e-12);
        }

        let c3 = FiniteAlgebra::commutative(3);
        let f = StateSet::face_from_projection(&Projection::indicator(&c3, &[true, true, false]).unwrap()).unwrap();
        for s in f.sample_extreme_states(20, 2).unwrap() {
            let w: Vec<f64> = s.blocks().iter().map(|b| b[(0, 0)].re).collect();
            assert!(w[2].abs() < 1e-15);
            assert!((w[0] - 1.0).abs() < 1e-12 || (w[1] - 1.0).abs() < 1e-12);
        }

        let full = StateSet::whole(&a);
        let first = full.sample_extreme_states(100, 42).unwrap();
        let again = full.sample_extreme_states(100, 42).unwrap();
        assert_eq!(first, again);
        assert!(first.iter().all(|s| s.rank() == 1 && is_state(&a, s.blocks()).unwrap().valid));

        let m = StateSet::moment(&a, vec![a.identity()], vec![ONE]).unwrap();
        assert!(matches!(m.sample_extreme_states(1, 0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn face_membership_is_monotone() {
        let a = FiniteAlgebra::new(vec![1, 2]).unwrap();
        let p = Projection::new(&a, vec![CMatrix::from_real_diag(&[1.0]), CMatrix::zeros(2, 2)]).unwrap();
        let q = Projection::new(&a, vec![CMatrix::from_real_diag(&[1.0]), CMatrix::from_real_diag(&[1.0, 0.0])]).unwrap();
        assert!(p.le(&q));
        let fp = StateSet::face_from_projection(&p).unwrap();
        let fq = StateSet::face_from_projection(&q).unwrap();
        for s in fp.sample_extreme_states(10, 3).unwrap() {
            assert!(fq.contains(&s));
        }
    }
}
