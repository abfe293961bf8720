//! Seminorms recovered from `ρ_L`: `L1` from the state-pair ratio and `L2`
//! from infimum distances between spectral faces, the chain
//! `L2 ≤ L1 ≤ L`, and a probe for subadditivity of `L2` on commuting pairs.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraElement, FiniteAlgebra, Projection, State, StateSet, CONSTRAINT_TOL};
use crate::error::{Error, Result};
use crate::hyper::{infimum_distance_with, HyperConfig, Method};
use crate::numerics::{eigh, solve_lp, CMatrix, HermitianMatrix, LinearProgram, LpStatus, Sense, C64};
use crate::qmetric::{kernel_check, rho, seminorm_eval, Seminorm, SeminormKind};
use crate::random;

/// Eigenvalues closer than this are one level.
pub const LEVEL_TOL: f64 = 1e-8;
/// Slack of the chain and probe comparisons.
pub const CHAIN_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralFaces {
    /// Distinct eigenvalues, ascending.
    pub levels: Vec<f64>,
    pub projections: Vec<Projection>,
    pub faces: Vec<StateSet>,
}

/// Spectral projections of a self-adjoint element and their faces.
pub fn spectral_faces(a: &AlgebraElement) -> Result<SpectralFaces> {
    if !a.is_hermitian(CONSTRAINT_TOL) {
        return Err(Error::NotHermitian(a.hermitian_defect()));
    }
    let algebra = a.algebra();
    let mut eig: Vec<(f64, usize, Vec<C64>)> = Vec::new();
    for (b, blk) in a.blocks().iter().enumerate() {
        let d = eigh(&HermitianMatrix::new(blk.hermitian_part()).expect("hermitian part"));
        for k in 0..blk.rows() {
            eig.push((d.eigenvalues[k], b, d.vector(k)));
        }
    }
    eig.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let mut clusters: Vec<Vec<(f64, usize, Vec<C64>)>> = Vec::new();
    for e in eig {
        match clusters.last_mut() {
            Some(c) if e.0 - c.last().unwrap().0 <= LEVEL_TOL => c.push(e),
            _ => clusters.push(vec![e]),
        }
    }
    let mut levels = Vec::new();
    let mut projections = Vec::new();
    let mut faces = Vec::new();
    for c in clusters {
        levels.push(c.iter().map(|e| e.0).sum::<f64>() / c.len() as f64);
        let mut blocks: Vec<CMatrix> = algebra.blocks().iter().map(|&n| CMatrix::zeros(n, n)).collect();
        for (_, b, v) in &c {
            blocks[*b] = &blocks[*b] + &CMatrix::outer(v, v);
        }
        let p = Projection::new(algebra, blocks)?;
        faces.push(StateSet::face_from_projection(&p)?);
        projections.push(p);
    }
    Ok(SpectralFaces { levels, projections, faces })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounded {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub method: Method,
}

fn check(a: &AlgebraElement, l: &Seminorm) -> Result<()> {
    if a.algebra() != l.algebra() {
        return Err(Error::Shape("element and seminorm live in different algebras".into()));
    }
    if !a.is_hermitian(CONSTRAINT_TOL) {
        return Err(Error::NotHermitian(a.hermitian_defect()));
    }
    if !kernel_check(l, l.algebra())?.valid {
        return Err(Error::KernelViolation("the seminorm vanishes off the scalars".into()));
    }
    Ok(())
}

/// Hermitian part shifted so that its first diagonal entry is zero. Shifting
/// by scalars changes neither `L1` nor `L2`, and `a` and `a + s·1` map to the
/// same element whenever `a + s·1` is computed without rounding.
fn normalized(a: &AlgebraElement) -> AlgebraElement {
    let h = a.hermitian_part();
    let corner = h.block(0)[(0, 0)].re;
    h.add_scalar(-corner)
}

/// `L1(a) = sup_{μ≠ν} |μ(a) − ν(a)| / ρ_L(μ, ν)`.
///
/// Polyhedral seminorms give one LP over scaled state differences
/// `Δ = Σ t_k h_k` with `Σ c_k |t_k| ≤ 1`; on commutative algebras `Δ` is
/// written as `μ' − ν'` with nonnegative `μ'`, `ν'`. Derivation seminorms get
/// a lower bound from pure-state pairs and the upper bound `L(a)`.
pub fn l1(a: &AlgebraElement, l: &Seminorm) -> Result<Bounded> {
    l1_with(a, l, 32, 0)
}

pub fn l1_with(a: &AlgebraElement, l: &Seminorm, samples: usize, seed: u64) -> Result<Bounded> {
    check(a, l)?;
    let a = normalized(a);
    match l.kind() {
        SeminormKind::Polyhedral { generators } => {
            let x = a.realify();
            let mut lp = LinearProgram::new(Sense::Maximize);
            let commutative = l.algebra().is_commutative();
            let n = x.len();
            let mut point_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
            let mut budget = Vec::new();
            for g in generators {
                let h = g.h.realify();
                let obj = if commutative { 0.0 } else { crate::numerics::dot(&h, &x) };
                let tp = lp.add_nonneg(obj);
                let tm = lp.add_nonneg(-obj);
                budget.push((tp, g.c));
                budget.push((tm, g.c));
                if commutative {
                    for (z, &hz) in h.iter().enumerate() {
                        if hz != 0.0 {
                            point_rows[z].push((tp, hz));
                            point_rows[z].push((tm, -hz));
                        }
                    }
                }
            }
            if commutative {
                for (z, mut row) in point_rows.into_iter().enumerate() {
                    let mu = lp.add_nonneg(x[z]);
                    let nu = lp.add_nonneg(-x[z]);
                    row.push((mu, -1.0));
                    row.push((nu, 1.0));
                    lp.add_eq(row, 0.0);
                }
            }
            lp.add_le(budget, 1.0);
            let sol = solve_lp(&lp)?;
            if sol.status != LpStatus::Optimal {
                return Err(Error::NumericalFailure(format!("L1 LP ended {:?}", sol.status)));
            }
            let v = sol.objective.max(0.0);
            Ok(Bounded { value: v, lower: v, upper: v, method: Method::ExactLp })
        }
        SeminormKind::Derivation(_) => {
            let upper = seminorm_eval(l, &a)?;
            let algebra = l.algebra();
            let mut pairs: Vec<(State, State)> = Vec::new();
            let faces = spectral_faces(&a)?;
            if faces.levels.len() >= 2 {
                let lo = faces.faces[0].sample_extreme_states(1, seed)?.remove(0);
                let hi = faces.faces[faces.levels.len() - 1].sample_extreme_states(1, seed)?.remove(0);
                pairs.push((hi, lo));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..samples {
                pairs.push((random::pure_state(algebra, &mut rng), random::pure_state(algebra, &mut rng)));
            }
            let mut lower = 0.0f64;
            for (mu, nu) in &pairs {
                let diff = (mu.expect(&a) - nu.expect(&a)).re.abs();
                if diff == 0.0 {
                    continue;
                }
                let r = rho(l, mu, nu)?;
                if r.upper > 0.0 {
                    lower = lower.max(diff / r.upper);
                }
            }
            Ok(Bounded { value: lower, lower, upper: upper.max(lower), method: Method::Sampled })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelPair {
    pub low: f64,
    pub high: f64,
    pub infimum: f64,
    pub infimum_lower: f64,
    pub infimum_upper: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct L2Result {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub method: Method,
    pub pairs: Vec<LevelPair>,
    /// Level pairs at infimum distance zero, which make `L2 = +∞`.
    pub infinite_pairs: usize,
}

impl L2Result {
    pub fn bounds(&self) -> Bounded {
        Bounded { value: self.value, lower: self.lower, upper: self.upper, method: self.method }
    }
}

/// `L2(a) = sup_{λ<λ'} (λ' − λ) / I_ρ(F_{a,λ'}, F_{a,λ})`.
pub fn l2(a: &AlgebraElement, l: &Seminorm) -> Result<L2Result> {
    l2_with(a, l, &HyperConfig::default())
}

pub fn l2_with(a: &AlgebraElement, l: &Seminorm, cfg: &HyperConfig) -> Result<L2Result> {
    check(a, l)?;
    let faces = spectral_faces(&normalized(a))?;
    let mut out = L2Result { value: 0.0, lower: 0.0, upper: 0.0, method: Method::ExactLp, pairs: vec![], infinite_pairs: 0 };
    let k = faces.levels.len();
    for i in 0..k {
        for j in i + 1..k {
            let (low, high) = (faces.levels[i], faces.levels[j]);
            let d = infimum_distance_with(&faces.faces[j], &faces.faces[i], l, cfg)?;
            let gap = high - low;
            let ratio = |den: f64| if den > 0.0 { gap / den } else { f64::INFINITY };
            let pair = LevelPair {
                low,
                high,
                infimum: d.value,
                infimum_lower: d.lower,
                infimum_upper: d.upper,
                ratio: ratio(d.value),
            };
            if d.value <= 0.0 {
                out.infinite_pairs += 1;
            }
            out.value = out.value.max(pair.ratio);
            out.lower = out.lower.max(ratio(d.upper));
            out.upper = out.upper.max(ratio(d.lower));
            out.method = out.method.max(d.method);
            out.pairs.push(pair);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub l: f64,
    pub l1: Bounded,
    pub l2: Bounded,
    /// `L2 ≤ L1` and `L1 ≤ L` at the bound level, within [`CHAIN_TOL`].
    pub holds: bool,
    /// Largest of `|L2 − L|` and `|L1 − L|`.
    pub max_equality_gap: f64,
}

pub fn chain_check(a: &AlgebraElement, l: &Seminorm) -> Result<ChainReport> {
    chain_check_with(a, l, 32, &HyperConfig::default())
}

/// [`chain_check`] with `samples` pure-state pairs for sampled `L1` bounds,
/// drawn from `cfg.seed`.
pub fn chain_check_with(a: &AlgebraElement, l: &Seminorm, samples: usize, cfg: &HyperConfig) -> Result<ChainReport> {
    let lv = seminorm_eval(l, a)?;
    let b1 = l1_with(a, l, samples, cfg.seed)?;
    let b2 = l2_with(a, l, cfg)?.bounds();
    let holds = b2.lower <= b1.upper + CHAIN_TOL && b1.lower <= lv + CHAIN_TOL;
    let gap = |x: f64| if x == lv { 0.0 } else { (x - lv).abs() };
    Ok(ChainReport { l: lv, max_equality_gap: gap(b1.value).max(gap(b2.value)), l1: b1, l2: b2, holds })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    Subadditivity,
    Leibniz,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub trial: usize,
    pub kind: ViolationKind,
    pub a: AlgebraElement,
    pub b: AlgebraElement,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub trials: usize,
    pub seed: u64,
    pub violations: Vec<Violation>,
    /// Largest `lhs − rhs` seen for each inequality.
    pub worst_subadditivity: f64,
    pub worst_leibniz: f64,
}

/// Commuting self-adjoint pairs `a = U diag(α) U*`, `b = U diag(β) U*`;
/// records pairs where `L2(a+b) > L2(a) + L2(b)` or
/// `L2(ab) > L2(a)‖b‖ + ‖a‖L2(b)` beyond the bounds.
pub fn subadditivity_probe(l: &Seminorm, algebra: &FiniteAlgebra, trials: usize, seed: u64) -> Result<ProbeReport> {
    if algebra != l.algebra() {
        return Err(Error::Shape("seminorm belongs to another algebra".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ProbeReport {
        trials,
        seed,
        violations: vec![],
        worst_subadditivity: f64::NEG_INFINITY,
        worst_leibniz: f64::NEG_INFINITY,
    };
    for trial in 0..trials {
        let mut ab = (Vec::new(), Vec::new());
        for &n in algebra.blocks() {
            let u = random::unitary(n, &mut rng);
            let alpha: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let beta: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let conj = |d: &[f64]| (&(&u * &CMatrix::from_real_diag(d)) * &u.adjoint()).hermitian_part();
            ab.0.push(conj(&alpha));
            ab.1.push(conj(&beta));
        }
        let a = AlgebraElement::new(algebra, ab.0)?;
        let b = AlgebraElement::new(algebra, ab.1)?;
        let la = l2(&a, l)?;
        let lb = l2(&b, l)?;
        let sum = l2(&a.add(&b)?, l)?;
        let excess = sum.lower - (la.upper + lb.upper);
        report.worst_subadditivity = report.worst_subadditivity.max(excess);
        if excess > CHAIN_TOL {
            report.violations.push(Violation {
                trial,
                kind: ViolationKind::Subadditivity,
                a: a.clone(),
                b: b.clone(),
                lhs: sum.lower,
                rhs: la.upper + lb.upper,
            });
        }
        let prod = l2(&a.mul(&b)?.hermitian_part(), l)?;
        let rhs = la.upper * b.hermitian_norm() + a.hermitian_norm() * lb.upper;
        let excess = prod.lower - rhs;
        report.worst_leibniz = report.worst_leibniz.max(excess);
        if excess > CHAIN_TOL {
            report.violations.push(Violation { trial, kind: ViolationKind::Leibniz, a, b, lhs: prod.lower, rhs });
        }
    }
    Ok(report)
}
