//! Infimum and Hausdorff distances between state sets under `ρ_L`.
//!
//! Three computation paths are chosen automatically:
//!
//! * commutative algebra with a polyhedral seminorm: one exact LP per
//!   distance (and per extreme point for Hausdorff);
//! * everything else with finitely many extreme points: cutting planes for the
//!   inner infimum, exact enumeration outside;
//! * faces with a continuum of extreme points: sampled outer supremum with
//!   batch doubling, reported as an estimate.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{ResolvedSet, State, StateSet};
use crate::error::{Error, Result};
use crate::numerics::{solve_lp, LinearProgram, LpStatus, Sense};
use crate::qmetric::{kernel_check, lex_cmp, rho_with_config, saddle, CuttingPlaneConfig, Seminorm, SeminormKind, Side};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    ExactLp,
    CuttingPlane,
    Sampled,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ExactLp => "exact-lp",
            Method::CuttingPlane => "cutting-plane",
            Method::Sampled => "sampled",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceResult {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub method: Method,
    /// States attaining (or nearly attaining) the value.
    pub witnesses: Option<(State, State)>,
    pub iterations: usize,
    pub converged: bool,
    /// Largest LP primal-dual gap met along the way.
    pub duality_gap: f64,
    /// Set when the value is `+∞` because a set is empty.
    pub empty: bool,
}

impl DistanceResult {
    fn exact(value: f64, gap: f64, witnesses: Option<(State, State)>, iterations: usize) -> Self {
        Self {
            value,
            lower: value,
            upper: value,
            method: Method::ExactLp,
            witnesses,
            iterations,
            converged: true,
            duality_gap: gap,
            empty: false,
        }
    }

    fn empty_set() -> Self {
        Self {
            value: f64::INFINITY,
            lower: f64::INFINITY,
            upper: f64::INFINITY,
            method: Method::ExactLp,
            witnesses: None,
            iterations: 0,
            converged: true,
            duality_gap: 0.0,
            empty: true,
        }
    }

    fn swapped(mut self) -> Self {
        self.witnesses = self.witnesses.map(|(a, b)| (b, a));
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperConfig {
    /// Cutting-plane settings; `None` picks tight tolerances for polyhedral
    /// seminorms and the default ones for derivations.
    pub cutting_plane: Option<CuttingPlaneConfig>,
    pub seed: u64,
    pub first_batch: usize,
    /// Relative change of the running maximum below which sampling stops.
    pub plateau: f64,
    pub max_samples: usize,
}

impl Default for HyperConfig {
    fn default() -> Self {
        Self { cutting_plane: None, seed: 0, first_batch: 64, plateau: 1e-3, max_samples: 4096 }
    }
}

impl HyperConfig {
    fn cp(&self, l: &Seminorm) -> CuttingPlaneConfig {
        self.cutting_plane.unwrap_or_else(|| {
            if l.is_polyhedral() {
                CuttingPlaneConfig::tight()
            } else {
                CuttingPlaneConfig::default()
            }
        })
    }
}

fn check_inputs(s: &StateSet, s2: &StateSet, l: &Seminorm) -> Result<()> {
    if s.algebra() != s2.algebra() || s.algebra() != l.algebra() {
        return Err(Error::Shape("sets and seminorm live in different algebras".into()));
    }
    let report = kernel_check(l, l.algebra())?;
    if !report.valid {
        return Err(Error::KernelViolation("the seminorm vanishes off the scalars; set distances are not defined".into()));
    }
    Ok(())
}

pub fn infimum_distance(s: &StateSet, s2: &StateSet, l: &Seminorm) -> Result<DistanceResult> {
    infimum_distance_with(s, s2, l, &HyperConfig::default())
}

/// `inf_{μ∈S, ν∈S'} ρ_L(μ, ν)`; `+∞` when either set is empty.
pub fn infimum_distance_with(s: &StateSet, s2: &StateSet, l: &Seminorm, cfg: &HyperConfig) -> Result<DistanceResult> {
    check_inputs(s, s2, l)?;
    if lex_cmp(&s.fingerprint(), &s2.fingerprint()) == std::cmp::Ordering::Greater {
        return Ok(infimum_distance_with(s2, s, l, cfg)?.swapped());
    }
    if s == s2 {
        let r = s.resolve()?;
        if r.is_empty() {
            return Ok(DistanceResult::empty_set());
        }
        if r.is_face() {
            let c = r.center();
            return Ok(DistanceResult::exact(0.0, 0.0, Some((c.clone(), c)), 0));
        }
    }
    let r = s.resolve()?;
    let r2 = s2.resolve()?;
    if r.is_empty() || r2.is_empty() {
        return Ok(DistanceResult::empty_set());
    }
    set_infimum(l, Side::Set(&r), &r2, cfg)
}

fn singleton(r: &ResolvedSet) -> Option<State> {
    r.finite_extreme_points().filter(|p| p.len() == 1).map(|mut p| p.remove(0))
}

/// Infimum between one side (a state or a set) and a set.
fn set_infimum(l: &Seminorm, left: Side<'_>, right: &ResolvedSet, cfg: &HyperConfig) -> Result<DistanceResult> {
    if let SeminormKind::Polyhedral { .. } = l.kind() {
        if l.algebra().is_commutative() {
            return commutative_infimum(l, &left, right);
        }
        let left_point = match &left {
            Side::Fixed(mu) => Some((*mu).clone()),
            Side::Set(r) => singleton(r),
        };
        if let (Some(mu), Some(nu)) = (left_point, singleton(right)) {
            let r = rho_with_config(l, &mu, &nu, &cfg.cp(l))?;
            return Ok(DistanceResult::exact(r.value, r.duality_gap, Some((mu, nu)), r.iterations));
        }
    }
    let out = saddle(l, left, Side::Set(right), &cfg.cp(l))?;
    Ok(DistanceResult {
        value: out.lower,
        lower: out.lower,
        upper: out.upper,
        method: Method::CuttingPlane,
        witnesses: Some((out.left, out.right)),
        iterations: out.iterations,
        converged: out.converged,
        duality_gap: out.upper - out.lower,
        empty: false,
    })
}

/// `min Σ c_k (t⁺_k + t⁻_k)  s.t.  Σ (t⁺_k − t⁻_k) h_k = μ − ν` with `μ`, `ν`
/// ranging over the given polytopes of probability vectors.
fn commutative_infimum(l: &Seminorm, left: &Side<'_>, right: &ResolvedSet) -> Result<DistanceResult> {
    let algebra = l.algebra();
    let n = algebra.num_blocks();
    let mut lp = LinearProgram::new(Sense::Minimize);
    let mut point_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for g in l.generators() {
        let h = g.h.realify();
        let tp = lp.add_nonneg(g.c);
        let tm = lp.add_nonneg(g.c);
        for (z, &hz) in h.iter().enumerate() {
            if hz != 0.0 {
                point_rows[z].push((tp, hz));
                point_rows[z].push((tm, -hz));
            }
        }
    }
    let mut rhs = vec![0.0; n];
    let add_set = |lp: &mut LinearProgram, set: &ResolvedSet, sign: f64, rows: &mut Vec<Vec<(usize, f64)>>| -> Vec<(usize, usize)> {
        let vars: Vec<(usize, usize)> = set.parts.iter().map(|p| (p.block, lp.add_nonneg(0.0))).collect();
        lp.add_eq(vars.iter().map(|&(_, v)| (v, 1.0)).collect(), 1.0);
        for r in &set.residual {
            lp.add_eq(vars.iter().zip(&r.compressed).map(|(&(_, v), h)| (v, h[(0, 0)].re)).collect(), r.target);
        }
        for &(z, v) in &vars {
            rows[z].push((v, sign));
        }
        vars
    };
    let left_vars = match left {
        Side::Fixed(mu) => {
            for (z, b) in mu.blocks().iter().enumerate() {
                rhs[z] = b[(0, 0)].re;
            }
            None
        }
        Side::Set(set) => Some(add_set(&mut lp, set, -1.0, &mut point_rows)),
    };
    let right_vars = add_set(&mut lp, right, 1.0, &mut point_rows);
    for (row, r) in point_rows.into_iter().zip(rhs) {
        lp.add_eq(row, r);
    }
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Infeasible => Ok(DistanceResult::empty_set()),
        LpStatus::Unbounded => Err(Error::NumericalFailure("infimum LP reported unbounded".into())),
        LpStatus::Optimal => {
            let build = |vars: &[(usize, usize)]| {
                let mut w = vec![0.0; n];
                for &(z, v) in vars {
                    w[z] = sol.primal[v].max(0.0);
                }
                let s: f64 = w.iter().sum();
                w.iter_mut().for_each(|x| *x /= s);
                State::from_weights(algebra, &w)
            };
            let mu = match (left, &left_vars) {
                (Side::Fixed(mu), _) => (*mu).clone(),
                (_, Some(v)) => build(v)?,
                _ => unreachable!(),
            };
            let nu = build(&right_vars)?;
            Ok(DistanceResult::exact(sol.objective.max(0.0), sol.duality_gap(), Some((mu, nu)), sol.pivots))
        }
    }
}

pub fn hausdorff_distance(s: &StateSet, s2: &StateSet, l: &Seminorm) -> Result<DistanceResult> {
    hausdorff_distance_with(s, s2, l, &HyperConfig::default())
}

/// `max(sup_{μ∈S} inf_{ν∈S'} ρ_L, sup_{ν∈S'} inf_{μ∈S} ρ_L)`.
pub fn hausdorff_distance_with(s: &StateSet, s2: &StateSet, l: &Seminorm, cfg: &HyperConfig) -> Result<DistanceResult> {
    check_inputs(s, s2, l)?;
    if lex_cmp(&s.fingerprint(), &s2.fingerprint()) == std::cmp::Ordering::Greater {
        return Ok(hausdorff_distance_with(s2, s, l, cfg)?.swapped());
    }
    let r = s.resolve()?;
    let r2 = s2.resolve()?;
    if r.is_empty() || r2.is_empty() {
        return Err(Error::EmptySet("the Hausdorff distance needs nonempty sets".into()));
    }
    let forward = directed(l, &r, s2, &r2, cfg)?;
    let backward = directed(l, &r2, s, &r, cfg)?.swapped();
    let (top, other) = if backward.value > forward.value { (backward, forward) } else { (forward, backward) };
    Ok(DistanceResult {
        value: top.value,
        lower: top.lower.max(other.lower),
        upper: top.upper.max(other.upper),
        method: top.method.max(other.method),
        witnesses: top.witnesses,
        iterations: top.iterations + other.iterations,
        converged: top.converged && other.converged,
        duality_gap: top.duality_gap.max(other.duality_gap),
        empty: false,
    })
}

/// `sup_{μ∈A} inf_{ν∈B} ρ_L(μ, ν)`.
fn directed(
    l: &Seminorm,
    ra: &ResolvedSet,
    b: &StateSet,
    rb: &ResolvedSet,
    cfg: &HyperConfig,
) -> Result<DistanceResult> {
    let inner = |mu: &State| -> Result<DistanceResult> {
        if b.contains(mu) {
            return Ok(DistanceResult::exact(0.0, 0.0, Some((mu.clone(), mu.clone())), 0));
        }
        set_infimum(l, Side::Fixed(mu), rb, cfg)
    };
    if let Some(points) = ra.finite_extreme_points() {
        let results: Vec<DistanceResult> = points.par_iter().map(inner).collect::<Result<_>>()?;
        return Ok(merge_directed(results, None));
    }
    if !ra.is_face() {
        return Err(Error::Unsupported(
            "Hausdorff distance from a moment set that is not a face needs its extreme points".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut batch = cfg.first_batch.max(1);
    let mut all: Vec<DistanceResult> = Vec::new();
    let mut running = f64::NEG_INFINITY;
    loop {
        let samples: Vec<State> = (0..batch).map(|_| ra.sample_pure(&mut rng)).collect();
        let results: Vec<DistanceResult> = samples.par_iter().map(inner).collect::<Result<_>>()?;
        all.extend(results);
        let next = all.iter().map(|r| r.value).fold(f64::NEG_INFINITY, f64::max);
        let settled = running.is_finite() && (next - running).abs() <= cfg.plateau * running.abs().max(f64::MIN_POSITIVE);
        running = next;
        if settled || all.len() >= cfg.max_samples {
            break;
        }
        batch *= 2;
    }
    log::debug!("sampled directed distance from {} pure states", all.len());
    Ok(merge_directed(all, Some(Method::Sampled)))
}

/// Maximum over inner results; ties go to the first one.
fn merge_directed(results: Vec<DistanceResult>, force: Option<Method>) -> DistanceResult {
    let mut best: Option<DistanceResult> = None;
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::NEG_INFINITY;
    let mut gap = 0.0f64;
    let mut iterations = 0;
    let mut converged = true;
    let mut method = Method::ExactLp;
    for r in results {
        lower = lower.max(r.lower);
        upper = upper.max(r.upper);
        gap = gap.max(r.duality_gap);
        iterations += r.iterations;
        converged &= r.converged;
        method = method.max(r.method);
        if best.as_ref().is_none_or(|b| r.value > b.value) {
            best = Some(r);
        }
    }
    let best = best.expect("at least one extreme point");
    let method = force.unwrap_or(method);
    DistanceResult {
        value: best.value,
        lower,
        upper: if method == Method::Sampled { f64::INFINITY } else { upper },
        method,
        witnesses: best.witnesses,
        iterations,
        converged,
        duality_gap: gap,
        empty: false,
    }
}
