//! Finite metric spaces: Lipschitz seminorms, the Monge-Kantorovich distance
//! between probability vectors, and Hausdorff and infimum distances between
//! subsets. [`verify_embedding`] compares the latter against the state-space
//! distances between the corresponding faces.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{FiniteAlgebra, Projection, StateSet};
use crate::error::{Error, Result};
use crate::hyper::{hausdorff_distance, infimum_distance};
use crate::numerics::{solve_lp, LinearProgram, LpStatus, Sense};
use crate::qmetric::from_metric;

const METRIC_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteMetricSpace {
    n: usize,
    d: Vec<f64>,
}

impl FiniteMetricSpace {
    pub fn new(d: Vec<Vec<f64>>) -> Result<Self> {
        let n = d.len();
        if n == 0 {
            return Err(Error::InvalidInput("a metric space needs at least one point".into()));
        }
        if d.iter().any(|row| row.len() != n) {
            return Err(Error::Shape("distance matrix must be square".into()));
        }
        let flat: Vec<f64> = d.into_iter().flatten().collect();
        Self::from_flat(n, flat)
    }

    pub fn from_flat(n: usize, d: Vec<f64>) -> Result<Self> {
        if d.len() != n * n {
            return Err(Error::Shape(format!("{} distances for {n} points", d.len())));
        }
        let at = |x: usize, y: usize| d[x * n + y];
        for x in 0..n {
            if at(x, x) != 0.0 {
                return Err(Error::InvalidInput(format!("d({x},{x}) = {} must be 0", at(x, x))));
            }
            for y in 0..n {
                let v = at(x, y);
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidInput(format!("d({x},{y}) = {v} is not a finite nonnegative number")));
                }
                if v != at(y, x) {
                    return Err(Error::InvalidInput(format!("d is not symmetric at ({x},{y})")));
                }
                if x != y && v <= 0.0 {
                    return Err(Error::InvalidInput(format!("distinct points {x} and {y} at distance 0")));
                }
                for z in 0..n {
                    if v > at(x, z) + at(z, y) + METRIC_TOL {
                        return Err(Error::InvalidInput(format!("triangle inequality fails for ({x},{z},{y})")));
                    }
                }
            }
        }
        Ok(Self { n, d })
    }

    /// Uniform points in the unit square with Euclidean distances.
    pub fn random_euclidean(n: usize, rng: &mut impl Rng) -> Self {
        loop {
            let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect();
            let d = (0..n * n)
                .map(|k| {
                    let (a, b) = (pts[k / n], pts[k % n]);
                    (a.0 - b.0).hypot(a.1 - b.1)
                })
                .collect();
            if let Ok(space) = Self::from_flat(n, d) {
                return space;
            }
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn dist(&self, x: usize, y: usize) -> f64 {
        self.d[x * self.n + y]
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        self.d.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    fn check_len(&self, len: usize, what: &str) -> Result<()> {
        if len != self.n {
            return Err(Error::Shape(format!("{what} has length {len}, the space has {} points", self.n)));
        }
        Ok(())
    }
}

/// Probability vector on the points of a space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measure(Vec<f64>);

impl Measure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidInput("measure weights must be nonnegative".into()));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("measure weights sum to {s}")));
        }
        Ok(Self(weights))
    }

    pub fn point(n: usize, x: usize) -> Result<Self> {
        let mut w = vec![0.0; n];
        *w.get_mut(x).ok_or_else(|| Error::Shape(format!("point {x} out of range")))? = 1.0;
        Ok(Self(w))
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subset(Vec<bool>);

impl Subset {
    pub fn from_indicator(members: Vec<bool>) -> Self {
        Self(members)
    }

    pub fn from_indices(n: usize, indices: &[usize]) -> Result<Self> {
        let mut m = vec![false; n];
        for &i in indices {
            *m.get_mut(i).ok_or_else(|| Error::Shape(format!("point {i} out of range")))? = true;
        }
        Ok(Self(m))
    }

    pub fn is_empty(&self) -> bool {
        !self.0.iter().any(|&b| b)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn indicator(&self) -> &[bool] {
        &self.0
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&i| self.0[i]).collect()
    }
}

/// `max_{x≠y} |f(x) − f(y)| / d(x, y)`.
pub fn lip(f: &[f64], space: &FiniteMetricSpace) -> Result<f64> {
    space.check_len(f.len(), "function")?;
    let n = space.size();
    let mut best = 0.0f64;
    for x in 0..n {
        for y in x + 1..n {
            best = best.max((f[x] - f[y]).abs() / space.dist(x, y));
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MkResult {
    /// Value of the Lipschitz-ball problem.
    pub value: f64,
    /// Value of the transport problem.
    pub transport_value: f64,
    /// Largest internal primal-dual gap of the two LPs, together with the gap
    /// between them.
    pub duality_gap: f64,
    /// An optimal 1-Lipschitz potential.
    pub potential: Vec<f64>,
    /// An optimal coupling, row-major.
    pub plan: Vec<f64>,
}

/// Monge-Kantorovich distance, solved as both the Lipschitz-ball LP and the
/// transport LP.
pub fn mk_distance(mu: &Measure, nu: &Measure, space: &FiniteMetricSpace) -> Result<MkResult> {
    space.check_len(mu.0.len(), "measure")?;
    space.check_len(nu.0.len(), "measure")?;
    let n = space.size();

    let mut ball = LinearProgram::new(Sense::Maximize);
    for x in 0..n {
        let c = mu.0[x] - nu.0[x];
        if x == 0 {
            ball.add_var(c, 0.0, 0.0);
        } else {
            ball.add_free(c);
        }
    }
    for x in 0..n {
        for y in 0..n {
            if x != y {
                ball.add_le(vec![(x, 1.0), (y, -1.0)], space.dist(x, y));
            }
        }
    }
    let primal = solve_lp(&ball)?;
    if primal.status != LpStatus::Optimal {
        return Err(Error::NumericalFailure(format!("Lipschitz-ball LP ended {:?}", primal.status)));
    }

    let mut transport = LinearProgram::new(Sense::Minimize);
    for x in 0..n {
        for y in 0..n {
            transport.add_nonneg(space.dist(x, y));
        }
    }
    for x in 0..n {
        transport.add_eq((0..n).map(|y| (x * n + y, 1.0)).collect(), mu.0[x]);
    }
    for y in 0..n {
        transport.add_eq((0..n).map(|x| (x * n + y, 1.0)).collect(), nu.0[y]);
    }
    let dual = solve_lp(&transport)?;
    if dual.status != LpStatus::Optimal {
        return Err(Error::NumericalFailure(format!("transport LP ended {:?}", dual.status)));
    }
    let gap = primal.duality_gap().max(dual.duality_gap()).max((primal.objective - dual.objective).abs());
    Ok(MkResult {
        value: primal.objective.max(0.0),
        transport_value: dual.objective,
        duality_gap: gap,
        potential: primal.primal[..n].to_vec(),
        plan: dual.primal[..n * n].to_vec(),
    })
}

fn check_pair(k: &Subset, k2: &Subset, space: &FiniteMetricSpace) -> Result<()> {
    space.check_len(k.len(), "subset")?;
    space.check_len(k2.len(), "subset")
}

/// `max(sup_{x∈K} d(x, K'), sup_{y∈K'} d(y, K))`.
pub fn hausdorff(k: &Subset, k2: &Subset, space: &FiniteMetricSpace) -> Result<f64> {
    check_pair(k, k2, space)?;
    if k.is_empty() || k2.is_empty() {
        return Err(Error::EmptySet("the Hausdorff distance needs nonempty subsets".into()));
    }
    let directed = |a: &Subset, b: &Subset| {
        a.indices()
            .into_iter()
            .map(|x| b.indices().into_iter().map(|y| space.dist(x, y)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    Ok(directed(k, k2).max(directed(k2, k)))
}

/// `min_{x∈K, y∈K'} d(x, y)`, and `+∞` when either subset is empty.
pub fn infimum(k: &Subset, k2: &Subset, space: &FiniteMetricSpace) -> Result<f64> {
    check_pair(k, k2, space)?;
    let mut best = f64::INFINITY;
    for x in k.indices() {
        for y in k2.indices() {
            best = best.min(space.dist(x, y));
        }
    }
    Ok(best)
}

/// `sup_{μ≠ν} |μ(f) − ν(f)| / ρ_d(μ, ν)` as one LP over scaled couplings:
/// `π ≥ 0` with marginals `μ', ν'` and cost `Σ π d ≤ 1`.
pub fn lip_via_states(f: &[f64], space: &FiniteMetricSpace) -> Result<f64> {
    space.check_len(f.len(), "function")?;
    let n = space.size();
    if n < 2 {
        return Ok(0.0);
    }
    let mut lp = LinearProgram::new(Sense::Maximize);
    let pi: Vec<usize> = (0..n * n).map(|_| lp.add_nonneg(0.0)).collect();
    let mu: Vec<usize> = (0..n).map(|x| lp.add_nonneg(f[x])).collect();
    let nu: Vec<usize> = (0..n).map(|y| lp.add_nonneg(-f[y])).collect();
    for x in 0..n {
        let mut row: Vec<(usize, f64)> = (0..n).map(|y| (pi[x * n + y], 1.0)).collect();
        row.push((mu[x], -1.0));
        lp.add_eq(row, 0.0);
    }
    for y in 0..n {
        let mut row: Vec<(usize, f64)> = (0..n).map(|x| (pi[x * n + y], 1.0)).collect();
        row.push((nu[y], -1.0));
        lp.add_eq(row, 0.0);
    }
    lp.add_le((0..n * n).map(|k| (pi[k], space.dist(k / n, k % n))).collect(), 1.0);
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::NumericalFailure(format!("state-ratio LP ended {:?}", sol.status)));
    }
    Ok(sol.objective.max(0.0))
}

/// `sup_{λ<λ'} (λ' − λ) / I_d(f⁻¹(λ'), f⁻¹(λ))` over attained values, with
/// levels grouped by exact equality.
pub fn lip_via_levels(f: &[f64], space: &FiniteMetricSpace) -> Result<f64> {
    space.check_len(f.len(), "function")?;
    let mut levels: Vec<f64> = f.to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let n = space.size();
    let level_set = |v: f64| Subset::from_indicator((0..n).map(|x| f[x] == v).collect());
    let mut best = 0.0f64;
    for (i, &lo) in levels.iter().enumerate() {
        for &hi in &levels[i + 1..] {
            let dist = infimum(&level_set(hi), &level_set(lo), space)?;
            best = best.max((hi - lo) / dist);
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub hausdorff_classical: f64,
    pub hausdorff_states: f64,
    pub infimum_classical: f64,
    pub infimum_states: f64,
    pub hausdorff_diff: f64,
    pub infimum_diff: f64,
    /// Largest LP duality gap met on the state side.
    pub duality_gap: f64,
}

/// Hausdorff and infimum distances of two subsets, computed classically and
/// between the faces `F_K`, `F_K'` of the state space of `C^N` under the
/// metric seminorm.
pub fn verify_embedding(k: &Subset, k2: &Subset, space: &FiniteMetricSpace) -> Result<EmbeddingReport> {
    check_pair(k, k2, space)?;
    let hc = hausdorff(k, k2, space)?;
    let ic = infimum(k, k2, space)?;
    let algebra = FiniteAlgebra::commutative(space.size());
    let l = from_metric(space)?;
    let fk = StateSet::face_from_projection(&Projection::indicator(&algebra, k.indicator())?)?;
    let fk2 = StateSet::face_from_projection(&Projection::indicator(&algebra, k2.indicator())?)?;
    let h = hausdorff_distance(&fk, &fk2, &l)?;
    let i = infimum_distance(&fk, &fk2, &l)?;
    Ok(EmbeddingReport {
        hausdorff_classical: hc,
        hausdorff_states: h.value,
        infimum_classical: ic,
        infimum_states: i.value,
        hausdorff_diff: (hc - h.value).abs(),
        infimum_diff: (ic - i.value).abs(),
        duality_gap: h.duality_gap.max(i.duality_gap),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn path3() -> FiniteMetricSpace {
        FiniteMetricSpace::new(vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]]).unwrap()
    }

    fn two() -> FiniteMetricSpace {
        FiniteMetricSpace::new(vec![vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap()
    }

    #[test]
    fn rejects_bad_metrics() {
        assert!(FiniteMetricSpace::new(vec![vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        assert!(FiniteMetricSpace::new(vec![vec![0.0, 0.0], vec![0.0, 0.0]]).is_err());
        assert!(FiniteMetricSpace::new(vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]]).is_err());
    }

    #[test]
    fn lip_examples() {
        assert_eq!(lip(&[3.0, 3.0, 3.0], &path3()).unwrap(), 0.0);
        assert_eq!(lip(&[0.0, 1.0], &two()).unwrap(), 0.5);
        assert_eq!(lip(&[0.0, 1.0, 1.5], &path3()).unwrap(), 1.0);
        let one = FiniteMetricSpace::new(vec![vec![0.0]]).unwrap();
        assert_eq!(lip(&[4.0], &one).unwrap(), 0.0);
    }

    #[test]
    fn mk_examples() {
        let x = path3();
        let mu = Measure::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert!(mk_distance(&mu, &mu, &x).unwrap().value.abs() < 1e-12);
        for a in 0..3 {
            for b in 0..3 {
                let r = mk_distance(&Measure::point(3, a).unwrap(), &Measure::point(3, b).unwrap(), &x).unwrap();
                assert!((r.value - x.dist(a, b)).abs() < 1e-12);
            }
        }
        let r = mk_distance(&Measure::point(3, 0).unwrap(), &Measure::new(vec![0.0, 0.5, 0.5]).unwrap(), &x).unwrap();
        assert!((r.value - 1.5).abs() < 1e-12);
        assert!((r.transport_value - 1.5).abs() < 1e-12);
        assert!(r.duality_gap < 1e-9);
    }

    #[test]
    fn set_distance_examples() {
        let x = path3();
        let a = Subset::from_indices(3, &[0]).unwrap();
        let bc = Subset::from_indices(3, &[1, 2]).unwrap();
        let ab = Subset::from_indices(3, &[0, 1]).unwrap();
        let c = Subset::from_indices(3, &[2]).unwrap();
        assert_eq!(hausdorff(&bc, &bc, &x).unwrap(), 0.0);
        assert_eq!(hausdorff(&a, &bc, &x).unwrap(), 2.0);
        assert_eq!(hausdorff(&ab, &bc, &x).unwrap(), 1.0);
        assert_eq!(infimum(&ab, &bc, &x).unwrap(), 0.0);
        assert_eq!(infimum(&a, &c, &x).unwrap(), 2.0);
        let empty = Subset::from_indicator(vec![false; 3]);
        assert_eq!(infimum(&empty, &a, &x).unwrap(), f64::INFINITY);
        assert!(matches!(hausdorff(&empty, &a, &x), Err(Error::EmptySet(_))));
    }

    #[test]
    fn lip_formulas_agree() {
        assert_eq!(lip_via_states(&[1.0, 1.0, 1.0], &path3()).unwrap(), 0.0);
        assert!((lip_via_states(&[0.0, 1.0], &two()).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(lip_via_levels(&[2.0, 2.0, 2.0], &path3()).unwrap(), 0.0);
        assert_eq!(lip_via_levels(&[0.0, 1.0], &two()).unwrap(), 0.5);
        assert_eq!(lip_via_levels(&[0.0, 1.0, 1.5], &path3()).unwrap(), 1.0);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let x = FiniteMetricSpace::random_euclidean(5, &mut rng);
            let f: Vec<f64> = (0..5).map(|_| rng.random::<f64>()).collect();
            let l = lip(&f, &x).unwrap();
            assert!((lip_via_states(&f, &x).unwrap() - l).abs() < 1e-9);
            assert!((lip_via_levels(&f, &x).unwrap() - l).abs() < 1e-12);
        }
    }

    #[test]
    fn embedding_examples() {
        let x = path3();
        let a = Subset::from_indices(3, &[0]).unwrap();
        let bc = Subset::from_indices(3, &[1, 2]).unwrap();
        let r = verify_embedding(&bc, &bc, &x).unwrap();
        assert_eq!((r.hausdorff_states, r.infimum_states), (0.0, 0.0));
        let r = verify_embedding(&a, &bc, &x).unwrap();
        assert!((r.hausdorff_states - 2.0).abs() < 1e-9);
        assert!((r.infimum_states - 1.0).abs() < 1e-9);
        assert!(r.hausdorff_diff <= 1e-6 && r.infimum_diff <= 1e-6);
    }
}
