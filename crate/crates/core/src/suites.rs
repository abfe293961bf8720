//! Randomized verification suites with fixed tolerances.
//!
//! Every trial draws from its own ChaCha stream keyed by `(seed, check,
//! trial)`, so reports are reproducible and independent of scheduling.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraElement, FiniteAlgebra, Projection, State, StateSet};
use crate::classical::{lip, lip_via_levels, lip_via_states, mk_distance, verify_embedding, FiniteMetricSpace, Measure, Subset};
use crate::error::{Error, Result};
use crate::hyper::{hausdorff_distance, HyperConfig};
use crate::lipanalog::chain_check;
use crate::qmetric::{from_metric, rho, RhoMethod};
use crate::random;
use crate::torus::classical_baseline;

pub const SUITES: [&str; 4] = ["classical", "embedding", "chain", "torus-baseline"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub instances: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: &str, instances: usize, deviations: impl IntoIterator<Item = f64>, tolerance: f64) -> Self {
        let max_deviation = deviations.into_iter().fold(0.0, f64::max);
        Self { name: name.into(), instances, max_deviation, tolerance, passed: max_deviation <= tolerance }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl SuiteReport {
    fn new(suite: &str, seed: u64, checks: Vec<Check>) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        Self { suite: suite.into(), seed, checks, passed }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn trial_rng(seed: u64, check: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((check << 32) | trial as u64);
    rng
}

/// Runs a suite by name. `trials` overrides the per-check instance counts.
pub fn run_suite(name: &str, trials: Option<usize>, seed: u64) -> Result<SuiteReport> {
    match name {
        "classical" => classical_suite(trials, seed),
        "embedding" => embedding_suite(trials, seed),
        "chain" => chain_suite(trials, seed),
        "torus-baseline" => torus_baseline_suite(seed),
        other => Err(Error::InvalidInput(format!("unknown suite '{other}'; expected one of {}", SUITES.join(", ")))),
    }
}

fn point(n: usize, x: usize) -> State {
    State::point_mass(&FiniteAlgebra::commutative(n), x).expect("index in range")
}

/// Pure-state isometry, the two Lipschitz constants from states, LP
/// self-duality and the metric axioms of `ρ_L`.
pub fn classical_suite(trials: Option<usize>, seed: u64) -> Result<SuiteReport> {
    let spaces = trials.unwrap_or(20);
    let iso: Vec<(f64, f64)> = (0..spaces)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, 1, t);
            let n = rng.random_range(2..=8);
            let x = FiniteMetricSpace::random_euclidean(n, &mut rng);
            let l = from_metric(&x)?;
            let (mut dev, mut gap) = (0.0f64, 0.0f64);
            for a in 0..n {
                for b in a + 1..n {
                    let r = rho(&l, &point(n, a), &point(n, b))?;
                    dev = dev.max((r.value - x.dist(a, b)).abs());
                    gap = gap.max(r.duality_gap);
                }
            }
            Ok((dev, gap))
        })
        .collect::<Result<_>>()?;

    let sweeps = trials.unwrap_or(100);
    let lips: Vec<(f64, f64)> = (0..sweeps)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, 2, t);
            let n = rng.random_range(2..=6);
            let x = FiniteMetricSpace::random_euclidean(n, &mut rng);
            let f: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let exact = lip(&f, &x)?;
            Ok(((lip_via_states(&f, &x)? - exact).abs(), (lip_via_levels(&f, &x)? - exact).abs()))
        })
        .collect::<Result<_>>()?;

    let mk: Vec<(f64, f64)> = (0..sweeps)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, 3, t);
            let n = rng.random_range(2..=6);
            let x = FiniteMetricSpace::random_euclidean(n, &mut rng);
            let w = |rng: &mut ChaCha8Rng| {
                let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
                let s: f64 = raw.iter().sum();
                Measure::new(raw.iter().map(|x| x / s).collect())
            };
            let r = mk_distance(&w(&mut rng)?, &w(&mut rng)?, &x)?;
            Ok((r.duality_gap, (r.value - r.transport_value).abs()))
        })
        .collect::<Result<_>>()?;

    let triples = trials.map_or(200, |t| 2 * t);
    let axioms: Vec<(f64, f64, f64)> = (0..triples)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, 4, t);
            let algebra = match t % 4 {
                0 => FiniteAlgebra::commutative(4),
                1 => FiniteAlgebra::matrix(2),
                2 => FiniteAlgebra::matrix(3),
                _ => FiniteAlgebra::new(vec![2, 1])?,
            };
            let l = if algebra.is_commutative() {
                from_metric(&FiniteMetricSpace::random_euclidean(4, &mut rng))?
            } else {
                random::polyhedral_seminorm(&algebra, 2, &mut rng)
            };
            let s: Vec<State> = (0..3).map(|_| random::density(&algebra, &mut rng)).collect();
            let ab = rho(&l, &s[0], &s[1])?;
            let ba = rho(&l, &s[1], &s[0])?;
            let bc = rho(&l, &s[1], &s[2])?;
            let ac = rho(&l, &s[0], &s[2])?;
            for r in [&ab, &bc, &ac] {
                if r.method != RhoMethod::ExactLp {
                    return Err(Error::NumericalFailure("polyhedral rho left the exact path".into()));
                }
            }
            let gap = [&ab, &ba, &bc, &ac].iter().map(|r| r.duality_gap).fold(0.0, f64::max);
            Ok(((ab.value - ba.value).abs(), (ac.value - ab.value - bc.value).max(0.0), gap))
        })
        .collect::<Result<_>>()?;

    let gaps = iso.iter().map(|p| p.1).chain(mk.iter().map(|p| p.0)).chain(axioms.iter().map(|p| p.2));
    Ok(SuiteReport::new(
        "classical",
        seed,
        vec![
            Check::new("pure-state-isometry", spaces, iso.iter().map(|p| p.0), 1e-7),
            Check::new("lip-via-states", sweeps, lips.iter().map(|p| p.0), 1e-6),
            Check::new("lip-via-levels", sweeps, lips.iter().map(|p| p.1), 1e-6),
            Check::new("mk-ball-vs-transport", sweeps, mk.iter().map(|p| p.1), 1e-7),
            Check::new("rho-symmetry", triples, axioms.iter().map(|p| p.0), 0.0),
            Check::new("rho-triangle", triples, axioms.iter().map(|p| p.1), 1e-7),
            Check::new("lp-duality-gap", spaces + sweeps + triples, gaps, 1e-7),
        ],
    ))
}

fn face(l_alg: &FiniteAlgebra, k: &Subset) -> Result<StateSet> {
    StateSet::face_from_projection(&Projection::indicator(l_alg, k.indicator())?)
}

/// Hausdorff and infimum distances of subsets against those of their faces,
/// and the triangle inequality of `H_ρ`.
pub fn embedding_suite(trials: Option<usize>, seed: u64) -> Result<SuiteReport> {
    let count = trials.unwrap_or(50);
    let rows: Vec<(f64, f64, f64, f64)> = (0..count)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, 5, t);
            let n = rng.random_range(2..=6);
            let x = FiniteMetricSpace::random_euclidean(n, &mut rng);
            let ks: Vec<Subset> = (0..3).map(|_| Subset::from_indicator(random::subset(n, &mut rng))).collect();
            let rep = verify_embedding(&ks[0], &ks[1], &x)?;
            let l = from_metric(&x)?;
            let f: Vec<StateSet> = ks.iter().map(|k| face(l.algebra(), k)).collect::<Result<_>>()?;
            let h01 = hausdorff_distance(&f[0], &f[1], &l)?;
            let h12 = hausdorff_distance(&f[1], &f[2], &l)?;
            let h02 = hausdorff_distance(&f[0], &f[2], &l)?;
            let tri = (h02.value - h01.value - h12.value).max(0.0);
            let gap = rep.duality_gap.max(h01.duality_gap).max(h12.duality_gap).max(h02.duality_gap);
            Ok((rep.hausdorff_diff, rep.infimum_diff, tri, gap))
        })
        .collect::<Result<_>>()?;
    Ok(SuiteReport::new(
        "embedding",
        seed,
        vec![
            Check::new("hausdorff-embedding", count, rows.iter().map(|r| r.0), 1e-6),
            Check::new("infimum-embedding", count, rows.iter().map(|r| r.1), 1e-6),
            Check::new("hausdorff-triangle", count, rows.iter().map(|r| r.2), 1e-6),
            Check::new("lp-duality-gap", count, rows.iter().map(|r| r.3), 1e-7),
        ],
    ))
}

/// `L2 ≤ L1 ≤ L` on random matrix instances and `L2 = L1 = L` on
/// commutative ones.
pub fn chain_suite(trials: Option<usize>, seed: u64) -> Result<SuiteReport> {
    let count = trials.unwrap_or(100);
    let matrix: Vec<f64> = (0..count)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, 6, t);
            let algebra = FiniteAlgebra::matrix(2 + t % 3);
            let l = random::polyhedral_seminorm(&algebra, rng.random_range(0..4), &mut rng);
            let a = random::hermitian(&algebra, &mut rng);
            let rep = chain_check(&a, &l)?;
            Ok((rep.l2.lower - rep.l1.upper).max(rep.l1.lower - rep.l).max(0.0))
        })
        .collect::<Result<_>>()?;
    let commutative: Vec<(f64, f64)> = (0..count)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, 7, t);
            let n = rng.random_range(2..=6);
            let x = FiniteMetricSpace::random_euclidean(n, &mut rng);
            let l = from_metric(&x)?;
            let f: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let rep = chain_check(&AlgebraElement::diagonal(l.algebra(), &f)?, &l)?;
            let violation = (rep.l2.lower - rep.l1.upper).max(rep.l1.lower - rep.l).max(0.0);
            Ok((violation, rep.max_equality_gap))
        })
        .collect::<Result<_>>()?;
    Ok(SuiteReport::new(
        "chain",
        seed,
        vec![
            Check::new("matrix-chain", count, matrix, 1e-6),
            Check::new("commutative-chain", count, commutative.iter().map(|r| r.0), 1e-6),
            Check::new("commutative-equality", count, commutative.iter().map(|r| r.1), 1e-6),
        ],
    ))
}

pub const BASELINE_GRID: usize = 16;

/// Sub-circle distances on the `16 × 16` grid torus.
pub fn torus_baseline_suite(seed: u64) -> Result<SuiteReport> {
    let r = classical_baseline(BASELINE_GRID, &HyperConfig { seed, ..HyperConfig::default() })?;
    let pairs = r.rows.len() + r.adjacent.len();
    Ok(SuiteReport::new(
        "torus-baseline",
        seed,
        vec![
            Check::new("circle-distance", pairs, [r.max_deviation], r.step + 1e-9),
            Check::new("adjacent-step", r.adjacent.len(), [r.max_adjacent_error], 1e-9),
            Check::new("lp-duality-gap", pairs, [r.max_duality_gap], 1e-7),
        ],
    ))
}
