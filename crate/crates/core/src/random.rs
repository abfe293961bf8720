//! Seeded generators for random instances.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::algebra::{AlgebraElement, FiniteAlgebra, State};
use crate::numerics::cmatrix::{dot, norm, ZERO};
use crate::numerics::{CMatrix, C64};
use crate::qmetric::Seminorm;

pub fn complex_gaussian(rng: &mut impl Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn ginibre(n: usize, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| complex_gaussian(rng))
}

/// Haar-distributed unitary via Gram-Schmidt on a Ginibre matrix.
pub fn unitary(n: usize, rng: &mut impl Rng) -> CMatrix {
    let g = ginibre(n, rng);
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut v = g.column(j);
        for u in &cols {
            let p = dot(u, &v);
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= p * ui;
            }
        }
        let nv = norm(&v);
        cols.push(v.iter().map(|z| z / nv).collect());
    }
    CMatrix::from_columns(n, &cols)
}

pub fn hermitian(algebra: &FiniteAlgebra, rng: &mut impl Rng) -> AlgebraElement {
    let blocks = algebra.blocks().iter().map(|&n| ginibre(n, rng).hermitian_part()).collect();
    AlgebraElement::new(algebra, blocks).expect("shapes follow the algebra")
}

/// Traceless self-adjoint element.
pub fn traceless_hermitian(algebra: &FiniteAlgebra, rng: &mut impl Rng) -> AlgebraElement {
    let h = hermitian(algebra, rng);
    let t: f64 = h.blocks().iter().map(|b| b.trace().re).sum::<f64>() / algebra.unit_trace() as f64;
    h.add_scalar(-t)
}

/// Full-rank random state `G G* / tr(G G*)` over all blocks.
pub fn density(algebra: &FiniteAlgebra, rng: &mut impl Rng) -> State {
    let blocks: Vec<CMatrix> = algebra
        .blocks()
        .iter()
        .map(|&n| {
            let g = ginibre(n, rng);
            (&g * &g.adjoint()).hermitian_part()
        })
        .collect();
    let tr: f64 = blocks.iter().map(|b| b.trace().re).sum();
    let blocks = blocks.iter().map(|b| b.scale_real(1.0 / tr)).collect();
    State::new(algebra, blocks).expect("Wishart matrices are states after normalization")
}

/// Pure state in a block chosen proportionally to its size.
pub fn pure_state(algebra: &FiniteAlgebra, rng: &mut impl Rng) -> State {
    let total = algebra.unit_trace();
    let mut pick = rng.random_range(0..total);
    let mut block = 0;
    while pick >= algebra.blocks()[block] {
        pick -= algebra.blocks()[block];
        block += 1;
    }
    let n = algebra.blocks()[block];
    let mut x = vec![ZERO; n];
    for z in x.iter_mut() {
        *z = complex_gaussian(rng);
    }
    State::pure(algebra, block, &x).expect("nonzero Gaussian vector")
}

/// A polyhedral seminorm with `dim − 1 + extra` random traceless
/// generators, which span the traceless part almost surely.
pub fn polyhedral_seminorm(algebra: &FiniteAlgebra, extra: usize, rng: &mut impl Rng) -> Seminorm {
    let count = algebra.realified_dim() - 1 + extra;
    let gens = (0..count).map(|_| (traceless_hermitian(algebra, rng), rng.random_range(0.5..2.0))).collect();
    Seminorm::polyhedral(algebra, gens).expect("random generators are valid")
}

/// Nonempty random subset of `0..n`.
pub fn subset(n: usize, rng: &mut impl Rng) -> Vec<bool> {
    loop {
        let s: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        if s.iter().any(|&b| b) {
            return s;
        }
    }
}
