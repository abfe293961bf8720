//! Hermitian eigendecomposition by cyclic Jacobi rotations.
//!
//! A Hermitian `H = A + iB` is embedded as the real symmetric matrix
//! `[[A, -B], [B, A]]` of order `2n`. Every eigenvalue of `H` appears twice in
//! the embedding; each eigenvalue cluster of the embedding is folded back into
//! complex eigenvectors by pivoted Gram-Schmidt.

use serde::{Deserialize, Serialize};

use super::cmatrix::{dot, norm, CMatrix, C64, ZERO};
use crate::error::{Error, Result};

/// Conjugate-symmetry tolerance for accepting a Hermitian matrix.
pub const HERMITIAN_TOL: f64 = 1e-12;

const MAX_SWEEPS: usize = 100;

/// A square complex matrix known to be Hermitian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Validates conjugate symmetry to within [`HERMITIAN_TOL`] (scaled by the
    /// largest entry) and stores the exactly symmetrized matrix.
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Shape(format!("{}x{} matrix is not square", m.rows(), m.cols())));
        }
        let defect = m.hermitian_defect();
        if defect > HERMITIAN_TOL * m.max_abs().max(1.0) {
            return Err(Error::NotHermitian(defect));
        }
        Ok(Self(m.hermitian_part()))
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        Self(CMatrix::from_real_diag(diag))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }
}

/// `H = V diag(λ) V*` with eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.eigenvalues.len();
        let v = &self.eigenvectors;
        CMatrix::from_fn(n, n, |i, j| {
            (0..n).map(|k| v[(i, k)] * self.eigenvalues[k] * v[(j, k)].conj()).sum()
        })
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.eigenvectors.column(k)
    }

    /// Largest eigenvalue modulus (the operator norm).
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }
}

/// Real symmetric eigenproblem by cyclic Jacobi. `a` is row-major `n x n`.
/// Returns unsorted eigenvalues and the row-major matrix whose columns are
/// the eigenvectors.
pub fn symmetric_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(a.len(), n * n);
    let mut a = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let total: f64 = a.iter().map(|x| x * x).sum();
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off <= 1e-32 * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                let t = sign / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i * n + i]).collect(), v)
}

/// Symmetric eigendecomposition with eigenvalues sorted ascending.
pub fn symmetric_eigen_sorted(a: &[f64], n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let (vals, vecs) = symmetric_eigen(a, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
    let values = order.iter().map(|&k| vals[k]).collect();
    let vectors = order.iter().map(|&k| (0..n).map(|i| vecs[i * n + k]).collect()).collect();
    (values, vectors)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(h: &HermitianMatrix) -> SpectralDecomposition {
    let m = h.matrix();
    let n = m.rows();
    if n == 0 {
        return SpectralDecomposition { eigenvalues: vec![], eigenvectors: CMatrix::zeros(0, 0) };
    }
    let nn = 2 * n;
    let mut emb = vec![0.0; nn * nn];
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            emb[i * nn + j] = z.re;
            emb[(i + n) * nn + (j + n)] = z.re;
            emb[i * nn + (j + n)] = -z.im;
            emb[(i + n) * nn + j] = z.im;
        }
    }
    let (vals, vecs) = symmetric_eigen_sorted(&emb, nn);
    let scale = vals.iter().map(|x| x.abs()).fold(1.0, f64::max);
    let gap_tol = 1e-10 * scale;

    let mut chosen: Vec<Vec<C64>> = Vec::with_capacity(n);
    let mut start = 0;
    while start < nn {
        let mut end = start + 1;
        while end < nn && vals[end] - vals[end - 1] <= gap_tol {
            end += 1;
        }
        // Each complex eigenvector shows up as a pair in the embedding.
        let want = ((end - start) / 2).max(1).min(n - chosen.len());
        let mut candidates: Vec<Vec<C64>> = (start..end)
            .map(|k| (0..n).map(|i| C64::new(vecs[k][i], vecs[k][i + n])).collect())
            .collect();
        for _ in 0..want {
            for c in candidates.iter_mut() {
                orthogonalize(c, &chosen);
            }
            let best = candidates
                .iter()
                .enumerate()
                .max_by(|a, b| norm(a.1).total_cmp(&norm(b.1)))
                .map(|(i, _)| i);
            let Some(best) = best else { break };
            let mut v = candidates.swap_remove(best);
            let nv = norm(&v);
            if nv < 1e-6 {
                break;
            }
            v.iter_mut().for_each(|z| *z /= nv);
            chosen.push(v);
        }
        start = end;
    }
    // Guard against a short count from pathological clustering.
    let mut e = 0;
    while chosen.len() < n && e < n {
        let mut v = vec![ZERO; n];
        v[e] = C64::new(1.0, 0.0);
        orthogonalize(&mut v, &chosen);
        let nv = norm(&v);
        if nv > 1e-6 {
            v.iter_mut().for_each(|z| *z /= nv);
            chosen.push(v);
        }
        e += 1;
    }

    let mut pairs: Vec<(f64, Vec<C64>)> = chosen
        .into_iter()
        .map(|v| {
            let hv = m.mul_vec(&v);
            (dot(&v, &hv).re, v)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let eigenvalues = pairs.iter().map(|p| p.0).collect();
    let columns: Vec<Vec<C64>> = pairs.into_iter().map(|p| p.1).collect();
    SpectralDecomposition { eigenvalues, eigenvectors: CMatrix::from_columns(n, &columns) }
}

fn orthogonalize(v: &mut [C64], basis: &[Vec<C64>]) {
    // Two passes of modified Gram-Schmidt.
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, v);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
    }
}

/// Euclidean projection of a real vector onto the probability simplex.
pub fn project_to_simplex(values: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - 1.0) / (j + 1) as f64;
        if u - t > 0.0 {
            tau = t;
        }
    }
    values.iter().map(|&x| (x - tau).max(0.0)).collect()
}

/// Nearest density matrix (PSD, unit trace) in Frobenius distance.
pub fn project_to_density(h: &HermitianMatrix) -> HermitianMatrix {
    let dec = eigh(h);
    let projected = project_to_simplex(&dec.eigenvalues);
    let rebuilt = SpectralDecomposition { eigenvalues: projected, eigenvectors: dec.eigenvectors };
    HermitianMatrix(rebuilt.reconstruct().hermitian_part())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::cmatrix::I;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, rng: &mut impl Rng) -> HermitianMatrix {
        let a = CMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        HermitianMatrix::new(a.hermitian_part()).unwrap()
    }

    fn check(h: &HermitianMatrix) {
        let d = eigh(h);
        assert!(d.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        assert!(d.reconstruct().max_abs_diff(h.matrix()) <= 1e-9);
        let vv = &d.eigenvectors.adjoint() * &d.eigenvectors;
        assert!(vv.max_abs_diff(&CMatrix::identity(h.dim())) <= 1e-9);
    }

    #[test]
    fn identity_eigenvalues() {
        let d = eigh(&HermitianMatrix::from_real_diag(&[1.0, 1.0]));
        assert!((d.eigenvalues[0] - 1.0).abs() < 1e-14 && (d.eigenvalues[1] - 1.0).abs() < 1e-14);
        check(&HermitianMatrix::from_real_diag(&[1.0, 1.0]));
    }

    #[test]
    fn diagonal_eigenvalues_sorted() {
        let d = eigh(&HermitianMatrix::from_real_diag(&[3.0, -1.0]));
        assert_eq!(d.eigenvalues, vec![-1.0, 3.0]);
    }

    #[test]
    fn pauli_x_eigenvalues() {
        // characteristic polynomial λ² - 1
        let h = HermitianMatrix::new(CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        let d = eigh(&h);
        assert!((d.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((d.eigenvalues[1] - 1.0).abs() < 1e-14);
        check(&h);
    }

    #[test]
    fn complex_entries() {
        // Pauli Y has eigenvalues ±1 with complex eigenvectors.
        let y = CMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => -I,
            (1, 0) => I,
            _ => ZERO,
        });
        let h = HermitianMatrix::new(y).unwrap();
        check(&h);
        let d = eigh(&h);
        assert!((d.eigenvalues[0] + 1.0).abs() < 1e-13);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = CMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(HermitianMatrix::new(m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn random_reconstruction_up_to_16() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=16 {
            for _ in 0..3 {
                check(&random_hermitian(n, &mut rng));
            }
        }
    }

    #[test]
    fn degenerate_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = eigh(&random_hermitian(5, &mut rng)).eigenvectors;
        let d = CMatrix::from_real_diag(&[1.0, 1.0, 1.0, -2.0, -2.0]);
        let h = HermitianMatrix::new((&(&u * &d) * &u.adjoint()).hermitian_part()).unwrap();
        check(&h);
    }

    #[test]
    fn density_projection_examples() {
        let p = project_to_density(&HermitianMatrix::from_real_diag(&[2.0, 0.0]));
        assert!(p.matrix().max_abs_diff(&CMatrix::from_real_diag(&[1.0, 0.0])) < 1e-12);
        let p = project_to_density(&HermitianMatrix::from_real_diag(&[-1.0, -1.0]));
        assert!(p.matrix().max_abs_diff(&CMatrix::from_real_diag(&[0.5, 0.5])) < 1e-12);
        let rho = HermitianMatrix::from_real_diag(&[0.25, 0.75]);
        assert!(project_to_density(&rho).matrix().max_abs_diff(rho.matrix()) < 1e-12);
    }

    #[test]
    fn density_projection_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..6 {
            let once = project_to_density(&random_hermitian(n, &mut rng));
            let twice = project_to_density(&once);
            assert!(once.matrix().max_abs_diff(twice.matrix()) <= 1e-10);
            assert!((once.matrix().trace().re - 1.0).abs() < 1e-12);
            assert!(eigh(&once).eigenvalues[0] >= -1e-12);
        }
    }
}
