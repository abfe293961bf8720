//! Benchmark fixtures shared by the criterion targets.

use ncdist_core::algebra::{FiniteAlgebra, State, StateSet};
use ncdist_core::classical::{FiniteMetricSpace, Measure, Subset};
use ncdist_core::qmetric::{from_metric, Combine, Seminorm};
use ncdist_core::random;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random Euclidean space with two measures on it.
pub fn transport(n: usize, seed: u64) -> (FiniteMetricSpace, Measure, Measure) {
    let mut r = rng(seed);
    let x = FiniteMetricSpace::random_euclidean(n, &mut r);
    let algebra = FiniteAlgebra::commutative(n);
    let mut measure = || {
        let s = random::density(&algebra, &mut r);
        Measure::new(s.blocks().iter().map(|b| b[(0, 0)].re).collect()).expect("densities are normalized")
    };
    let (mu, nu) = (measure(), measure());
    (x, mu, nu)
}

/// Polyhedral seminorm on `M_n` with a pair of random states.
pub fn polyhedral_pair(n: usize, seed: u64) -> (Seminorm, State, State) {
    let mut r = rng(seed);
    let algebra = FiniteAlgebra::matrix(n);
    let l = random::polyhedral_seminorm(&algebra, 2, &mut r);
    (l, random::density(&algebra, &mut r), random::density(&algebra, &mut r))
}

/// Commutator seminorm `max_j ‖i[D_j, ·]‖` on `M_n` with a pair of random states.
pub fn commutator_pair(n: usize, seed: u64) -> (Seminorm, State, State) {
    let mut r = rng(seed);
    let algebra = FiniteAlgebra::matrix(n);
    let ds: Vec<_> = (0..2).map(|_| random::hermitian(&algebra, &mut r)).collect();
    let l = Seminorm::commutator(&algebra, &ds, Combine::Max).expect("hermitian generators");
    (l, random::density(&algebra, &mut r), random::density(&algebra, &mut r))
}

/// Two faces of `C^n` for a metric seminorm.
pub fn faces(n: usize, seed: u64) -> (Seminorm, StateSet, StateSet) {
    let mut r = rng(seed);
    let x = FiniteMetricSpace::random_euclidean(n, &mut r);
    let l = from_metric(&x).expect("metric");
    let face = |k: Subset| {
        let p = ncdist_core::algebra::Projection::indicator(l.algebra(), k.indicator()).expect("indicator");
        StateSet::face_from_projection(&p).expect("nonempty")
    };
    let a = face(Subset::from_indices(n, &[0, 1]).expect("in range"));
    let b = face(Subset::from_indices(n, &[n - 2, n - 1]).expect("in range"));
    (l, a, b)
}
