//! Hyperhermitian quaternionic matrices, their complexification and the
//! Moore determinant.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quat::Quaternion;

/// Relative tolerance for the hyperhermitian symmetry check.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Relative tolerance for matching the equal eigenvalue pairs of the
/// complexification.
pub const PAIRING_TOL: f64 = 1e-8;
/// Relative tolerance used by [`is_psd`].
pub const PSD_TOL: f64 = 1e-10;

/// An `n x n` quaternionic matrix with `A[b][a] = conj(A[a][b])`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperHermitianMatrix {
    n: usize,
    entries: Vec<Quaternion>,
}

impl HyperHermitianMatrix {
    /// Validates the symmetry `A[b][a] = conj(A[a][b])` and the reality of the
    /// diagonal, both relative to the largest entry.
    pub fn new(n: usize, entries: Vec<Quaternion>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::Dimension {
                expected: n * n,
                got: entries.len(),
            });
        }
        let scale = entries.iter().map(|q| q.norm()).fold(1.0, f64::max);
        let tol = SYMMETRY_TOL * scale;
        for a in 0..n {
            for b in a..n {
                let dev = entries[b * n + a].dist_max(entries[a * n + b].conj());
                if dev > tol || !dev.is_finite() {
                    return Err(Error::NotHyperhermitian {
                        row: a,
                        col: b,
                        deviation: dev,
                    });
                }
            }
        }
        Ok(Self { n, entries })
    }

    /// Averages `A` with its quaternionic conjugate transpose, which yields a
    /// hyperhermitian matrix for any square input.
    pub fn symmetrized(n: usize, entries: &[Quaternion]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::Dimension {
                expected: n * n,
                got: entries.len(),
            });
        }
        let mut out = vec![Quaternion::ZERO; n * n];
        for a in 0..n {
            for b in 0..n {
                out[a * n + b] = (entries[a * n + b] + entries[b * n + a].conj()).scale(0.5);
            }
        }
        Ok(Self { n, entries: out })
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut entries = vec![Quaternion::ZERO; n * n];
        for (a, &v) in d.iter().enumerate() {
            entries[a * n + a] = Quaternion::real(v);
        }
        Self { n, entries }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> Quaternion {
        self.entries[row * self.n + col]
    }

    pub fn entries(&self) -> &[Quaternion] {
        &self.entries
    }

    /// Frobenius norm `sqrt(sum |A_ab|^2)`.
    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|q| q.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            n: self.n,
            entries: self.entries.iter().map(|q| q.scale(s)).collect(),
        }
    }

    /// Simultaneous permutation of rows and columns: `B[a][b] = A[p(a)][p(b)]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n;
        assert_eq!(perm.len(), n);
        let mut entries = vec![Quaternion::ZERO; n * n];
        for a in 0..n {
            for b in 0..n {
                entries[a * n + b] = self.get(perm[a], perm[b]);
            }
        }
        Self { n, entries }
    }

    /// The `n` quaternionic eigenvalues (one from each equal pair of the
    /// complexification), ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let spectrum = complexify(self).hermitian_eigenvalues();
        pair_eigenvalues(&spectrum)
    }
}

/// A dense complex matrix. Carries the complexification of a hyperhermitian
/// matrix and serves as the independent route for determinant checks.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix(pub DMatrix<Complex64>);

impl ComplexMatrix {
    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let m = &self.0;
        let n = m.nrows();
        (0..n).all(|r| (0..n).all(|c| (m[(r, c)] - m[(c, r)].conj()).norm() <= tol))
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.0 + self.0.adjoint()).map(|z| z * 0.5);
        let eig = nalgebra::SymmetricEigen::new(herm);
        let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Determinant by LU factorisation.
    pub fn determinant(&self) -> Complex64 {
        self.0.clone().determinant()
    }
}

/// Entrywise block map `q = a + b j  ->  [[a, b], [-conj(b), conj(a)]]`,
/// an injective algebra homomorphism from quaternions into `2 x 2` complex
/// matrices. Hyperhermitian input gives a Hermitian `2n x 2n` matrix.
pub fn complexify(a: &HyperHermitianMatrix) -> ComplexMatrix {
    let n = a.size();
    let mut m = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
    for r in 0..n {
        for c in 0..n {
            let (za, zb) = a.get(r, c).complex_pair();
            m[(2 * r, 2 * c)] = za;
            m[(2 * r, 2 * c + 1)] = zb;
            m[(2 * r + 1, 2 * c)] = -zb.conj();
            m[(2 * r + 1, 2 * c + 1)] = za.conj();
        }
    }
    ComplexMatrix(m)
}

/// Pairs a sorted spectrum of length `2n` into `n` values, rejecting pairs
/// whose gap exceeds [`PAIRING_TOL`] relative to the spectral radius.
fn pair_eigenvalues(sorted: &[f64]) -> Result<Vec<f64>> {
    let radius = sorted.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = PAIRING_TOL * radius.max(f64::MIN_POSITIVE);
    sorted
        .chunks_exact(2)
        .enumerate()
        .map(|(pair, c)| {
            let gap = (c[1] - c[0]).abs();
            if gap > tol {
                Err(Error::EigenPairing {
                    pair,
                    gap: gap / radius.max(f64::MIN_POSITIVE),
                })
            } else {
                Ok(0.5 * (c[0] + c[1]))
            }
        })
        .collect()
}

/// Moore determinant: the product of one eigenvalue from each equal pair of
/// the Hermitian complexification. The sign is carried by the eigenvalues,
/// so `moore_det(A)^2 = det(complexify(A))`.
pub fn moore_det(a: &HyperHermitianMatrix) -> Result<f64> {
    if a.size() == 0 {
        return Ok(1.0);
    }
    Ok(a.eigenvalues()?.iter().product())
}

/// Positive semidefiniteness: every eigenvalue of the complexification is at
/// least `-PSD_TOL * |A|`.
pub fn is_psd(a: &HyperHermitianMatrix) -> bool {
    let tol = PSD_TOL * a.norm();
    complexify(a)
        .hermitian_eigenvalues()
        .first()
        .is_none_or(|&min| min >= -tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quat::qmul;

    fn q(w: f64, x: f64, y: f64, z: f64) -> Quaternion {
        Quaternion::new(w, x, y, z)
    }

    fn jmat() -> HyperHermitianMatrix {
        // [[1, j], [-j, 1]]
        HyperHermitianMatrix::new(2, vec![Quaternion::ONE, Quaternion::J, -Quaternion::J, Quaternion::ONE])
            .unwrap()
    }

    #[test]
    fn block_map_is_multiplicative() {
        let a = q(0.3, -1.2, 0.7, 2.0);
        let b = q(-0.4, 0.9, 1.1, -0.5);
        let one = |x: Quaternion| complexify(&HyperHermitianMatrix { n: 1, entries: vec![x] }).0;
        let lhs = one(qmul(a, b));
        let rhs = one(a) * one(b);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn complexify_identity_and_diagonal() {
        let id = complexify(&HyperHermitianMatrix::identity(2));
        assert_eq!(id.0, DMatrix::<Complex64>::identity(4, 4));
        let d = complexify(&HyperHermitianMatrix::diagonal(&[2.0, 3.0]));
        let diag: Vec<f64> = (0..4).map(|i| d.0[(i, i)].re).collect();
        assert_eq!(diag, vec![2.0, 2.0, 3.0, 3.0]);
        assert!(d.is_hermitian(0.0));
    }

    #[test]
    fn complexify_j_matrix_spectrum() {
        let c = complexify(&jmat());
        assert!(c.is_hermitian(1e-15));
        let ev = c.hermitian_eigenvalues();
        let expect = [0.0, 0.0, 2.0, 2.0];
        for (e, x) in ev.iter().zip(expect) {
            assert!((e - x).abs() < 1e-12, "{ev:?}");
        }
    }

    #[test]
    fn rejects_asymmetric_input() {
        let err = HyperHermitianMatrix::new(2, vec![Quaternion::ONE, Quaternion::J, Quaternion::J, Quaternion::ONE])
            .unwrap_err();
        assert!(matches!(err, Error::NotHyperhermitian { row: 0, col: 1, .. }));
        let err = HyperHermitianMatrix::new(1, vec![q(1.0, 0.5, 0.0, 0.0)]).unwrap_err();
        assert!(matches!(err, Error::NotHyperhermitian { .. }));
    }

    #[test]
    fn moore_det_examples() {
        assert_eq!(moore_det(&HyperHermitianMatrix::identity(3)).unwrap(), 1.0);
        assert!((moore_det(&HyperHermitianMatrix::diagonal(&[2.0, 3.0])).unwrap() - 6.0).abs() < 1e-12);
        assert!(moore_det(&jmat()).unwrap().abs() < 1e-12);
        // a b - |q|^2
        let off = q(0.2, -0.3, 0.5, 0.1);
        let m = HyperHermitianMatrix::new(2, vec![Quaternion::real(2.0), off, off.conj(), Quaternion::real(-1.5)])
            .unwrap();
        let expect = 2.0 * -1.5 - off.norm_sqr();
        assert!((moore_det(&m).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn moore_det_keeps_sign_of_mixed_spectrum() {
        let d = HyperHermitianMatrix::diagonal(&[-2.0, 3.0, 0.5]);
        assert!((moore_det(&d).unwrap() + 3.0).abs() < 1e-12);
    }

    #[test]
    fn pairing_rejects_split_pairs() {
        let err = pair_eigenvalues(&[0.0, 1.0, 2.0, 3.0]).unwrap_err();
        assert!(matches!(err, Error::EigenPairing { pair: 0, .. }));
    }

    #[test]
    fn psd_examples() {
        assert!(is_psd(&HyperHermitianMatrix::identity(3)));
        assert!(!is_psd(&HyperHermitianMatrix::diagonal(&[1.0, -1.0])));
        assert!(is_psd(&jmat()));
        assert!(!is_psd(&jmat().scale(-1.0)));
    }

    #[test]
    fn symmetrized_averages_with_conjugate_transpose() {
        let raw = vec![q(1.0, 0.1, 0.0, 0.0), Quaternion::J, q(0.0, 0.0, -0.8, 0.0), Quaternion::ONE];
        let s = HyperHermitianMatrix::symmetrized(2, &raw).unwrap();
        assert!(HyperHermitianMatrix::new(2, s.entries().to_vec()).is_ok());
        assert!((s.get(0, 1).y - 0.9).abs() < 1e-15);
        assert_eq!(s.get(0, 0), Quaternion::ONE);
    }
}
