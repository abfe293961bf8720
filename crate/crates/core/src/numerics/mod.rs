//! Dense Hermitian linear algebra and the LP core shared by every other module.

pub mod cmatrix;
pub mod eigen;
pub mod lp;

pub use cmatrix::{CMatrix, C64};
pub use eigen::{eigh, project_to_density, project_to_simplex, HermitianMatrix, SpectralDecomposition};
pub use lp::{solve_lp, LinearProgram, LpSolution, LpStatus, Sense};

use std::f64::consts::SQRT_2;

/// Real coordinates of a Hermitian `n x n` matrix: the diagonal, then
/// `√2 Re` and `√2 Im` of each upper entry. The map is an isometry from the
/// trace pairing `Re tr(AB)` to the Euclidean dot product.
pub fn realify_hermitian(m: &CMatrix) -> Vec<f64> {
    let n = m.rows();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        out.push(m[(i, i)].re);
    }
    for i in 0..n {
        for j in i + 1..n {
            let z = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            out.push(SQRT_2 * z.re);
            out.push(SQRT_2 * z.im);
        }
    }
    out
}

/// Inverse of [`realify_hermitian`].
pub fn unrealify_hermitian(n: usize, coords: &[f64]) -> CMatrix {
    assert_eq!(coords.len(), n * n);
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = C64::new(coords[i], 0.0);
    }
    let mut k = n;
    for i in 0..n {
        for j in i + 1..n {
            let z = C64::new(coords[k], coords[k + 1]) / SQRT_2;
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            k += 2;
        }
    }
    m
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// Splits `R^dim` into the row space of `rows` and its orthogonal complement,
/// both as orthonormal bases. Directions with squared singular value below
/// `rel_tol` times the largest are assigned to the complement.
pub fn row_space_split(rows: &[Vec<f64>], dim: usize, rel_tol: f64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut gram = vec![0.0; dim * dim];
    for r in rows {
        for i in 0..dim {
            if r[i] == 0.0 {
                continue;
            }
            for j in 0..dim {
                gram[i * dim + j] += r[i] * r[j];
            }
        }
    }
    let (vals, vecs) = eigen::symmetric_eigen_sorted(&gram, dim);
    let top = vals.last().copied().unwrap_or(0.0).max(0.0);
    let cut = rel_tol * top.max(f64::MIN_POSITIVE);
    let mut span = Vec::new();
    let mut complement = Vec::new();
    for (v, vec) in vals.into_iter().zip(vecs) {
        if top > 0.0 && v > cut {
            span.push(vec);
        } else {
            complement.push(vec);
        }
    }
    (span, complement)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn realification_is_isometric() {
        let a = CMatrix::from_fn(3, 3, |i, j| C64::new((i * 3 + j) as f64, i as f64 - j as f64)).hermitian_part();
        let b = CMatrix::from_fn(3, 3, |i, j| C64::new((i + j) as f64 * 0.5, (j as f64) * 0.25 - i as f64)).hermitian_part();
        let lhs = a.trace_pairing(&b);
        let rhs = dot(&realify_hermitian(&a), &realify_hermitian(&b));
        assert!((lhs - rhs).abs() < 1e-12);
        assert!(unrealify_hermitian(3, &realify_hermitian(&a)).max_abs_diff(&a) < 1e-14);
    }

    #[test]
    fn row_space_of_rank_one() {
        let (span, comp) = row_space_split(&[vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.0]], 3, 1e-12);
        assert_eq!(span.len(), 1);
        assert_eq!(comp.len(), 2);
    }
}
