//! Pointwise operators on `H^n`: the hypercomplex structures, the
//! quaternionic Hessian, the coefficients of `dd_J u` and the density of
//! `(dd_J u)^n` against `dz_0 ^ ... ^ dz_{2n-1}`.
//!
//! Every operator has a finite-difference path (central differences of the
//! field values) and an exact path for fields that supply their own real
//! Hessian, e.g. [`Polynomial`](crate::field::Polynomial).

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{frame_sign, CoordinatePoint, ScalarField};
use crate::hyperhermitian::{is_psd, moore_det, HyperHermitianMatrix};
use crate::quat::Quaternion;

/// One of the three complex structures induced by right multiplication by
/// `i`, `j` or `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    I,
    J,
    K,
}

impl Structure {
    fn unit(self) -> Quaternion {
        match self {
            Structure::I => Quaternion::I,
            Structure::J => Quaternion::J,
            Structure::K => Quaternion::K,
        }
    }
}

/// `sign * d/dx_index`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignedIndex {
    pub index: usize,
    pub sign: i8,
}

/// Image of the frame vector `d/dx_m` under `I`, `J` or `K` for a point of
/// `H^n`: the tangent vector `e_a` of the quaternion slot containing `m` is
/// sent to `e_a * u`, `u` in `{i, j, k}`.
pub fn structure_action(which: Structure, frame_index: usize, n: usize) -> Result<SignedIndex> {
    if frame_index >= 4 * n {
        return Err(Error::FrameIndex {
            index: frame_index,
            len: 4 * n,
        });
    }
    let a = frame_index % 4;
    let image = Quaternion::basis(a) * which.unit();
    let c = image.to_array();
    let b = (0..4).find(|&b| c[b] != 0.0).expect("basis product is a unit");
    Ok(SignedIndex {
        index: frame_index - a + b,
        sign: c[b].signum() as i8,
    })
}

/// Default central-difference step `1e-3 (1 + |p|)`.
pub fn default_step(p: &CoordinatePoint) -> f64 {
    1e-3 * (1.0 + p.norm())
}

fn check_dims(u: &dyn ScalarField, p: &CoordinatePoint) -> Result<()> {
    if u.dim() != p.dim() {
        return Err(Error::Dimension {
            expected: u.dim(),
            got: p.dim(),
        });
    }
    Ok(())
}

/// Real Hessian `d^2 u / dx_a dx_b` by second-order central differences.
pub fn real_hessian_fd(u: &dyn ScalarField, p: &CoordinatePoint, h: f64) -> Result<DMatrix<f64>> {
    check_dims(u, p)?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
    }
    let x0 = p.real();
    let m = x0.len();
    let mut x = x0.to_vec();
    let sample = |x: &[f64]| -> Result<f64> {
        let v = u.eval(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { at: x.to_vec() })
        }
    };
    let f0 = sample(&x)?;
    let mut hess = DMatrix::zeros(m, m);
    for a in 0..m {
        x[a] = x0[a] + h;
        let fp = sample(&x)?;
        x[a] = x0[a] - h;
        let fm = sample(&x)?;
        x[a] = x0[a];
        hess[(a, a)] = (fp - 2.0 * f0 + fm) / (h * h);
        for b in (a + 1)..m {
            let mut corner = |sa: f64, sb: f64| -> Result<f64> {
                x[a] = x0[a] + sa * h;
                x[b] = x0[b] + sb * h;
                let v = sample(&x);
                x[a] = x0[a];
                x[b] = x0[b];
                v
            };
            let v = (corner(1.0, 1.0)? - corner(1.0, -1.0)? - corner(-1.0, 1.0)? + corner(-1.0, -1.0)?)
                / (4.0 * h * h);
            hess[(a, b)] = v;
            hess[(b, a)] = v;
        }
    }
    Ok(hess)
}

fn exact_real_hessian(u: &dyn ScalarField, p: &CoordinatePoint) -> Result<DMatrix<f64>> {
    check_dims(u, p)?;
    u.exact_hessian(p.real())
        .ok_or_else(|| Error::InvalidArgument("field has no exact Hessian".into()))
}

/// Quaternionic Hessian entries `d^2 u / dqbar_a dq_b` assembled from a real
/// Hessian: `sum_{s,t} e_s H[4a+s][4b+t] c_t` with `e = (1, i, j, k)`,
/// `c_0 = 1` and `c_t = -e_t` otherwise. Row-major, not symmetrized.
pub fn quaternionic_entries(real_hessian: &DMatrix<f64>) -> Vec<Quaternion> {
    let m = real_hessian.nrows();
    let n = m / 4;
    let right = |t: usize| {
        if t == 0 {
            Quaternion::ONE
        } else {
            -Quaternion::basis(t)
        }
    };
    let mut out = vec![Quaternion::ZERO; n * n];
    for a in 0..n {
        for b in 0..n {
            let mut acc = Quaternion::ZERO;
            for s in 0..4 {
                for t in 0..4 {
                    let d = real_hessian[(4 * a + s, 4 * b + t)];
                    if d != 0.0 {
                        acc += (Quaternion::basis(s) * right(t)).scale(d);
                    }
                }
            }
            out[a * n + b] = acc;
        }
    }
    out
}

/// Finite-difference quaternionic Hessian before symmetrization.
pub fn quaternionic_hessian_raw(u: &dyn ScalarField, p: &CoordinatePoint, h: f64) -> Result<Vec<Quaternion>> {
    Ok(quaternionic_entries(&real_hessian_fd(u, p, h)?))
}

/// `Hess(u, H)` at `p` by central differences with step `h`, symmetrized to
/// a hyperhermitian matrix.
pub fn quaternionic_hessian(u: &dyn ScalarField, p: &CoordinatePoint, h: f64) -> Result<HyperHermitianMatrix> {
    let raw = quaternionic_hessian_raw(u, p, h)?;
    HyperHermitianMatrix::symmetrized(p.dim(), &raw)
}

/// `Hess(u, H)` from the field's exact second partials.
pub fn quaternionic_hessian_exact(u: &dyn ScalarField, p: &CoordinatePoint) -> Result<HyperHermitianMatrix> {
    let raw = quaternionic_entries(&exact_real_hessian(u, p)?);
    HyperHermitianMatrix::symmetrized(p.dim(), &raw)
}

/// Coefficients `c[i][j]` of `dd_J u = sum_{i<j} c[i][j] dz_i ^ dz_j`, stored
/// as a full antisymmetric `2n x 2n` array.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoFormCoefficients {
    n: usize,
    c: DMatrix<Complex64>,
}

impl TwoFormCoefficients {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.c[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.c
    }

    /// `sum_k c[2k][2k+1]`, the component along `Omega`.
    pub fn omega_trace(&self) -> Complex64 {
        (0..self.n).map(|k| self.c[(2 * k, 2 * k + 1)]).sum()
    }

    /// The form `Omega = sum_k dz_{2k} ^ dz_{2k+1}`.
    pub fn omega(n: usize) -> Self {
        let mut c = DMatrix::zeros(2 * n, 2 * n);
        for k in 0..n {
            c[(2 * k, 2 * k + 1)] = Complex64::new(1.0, 0.0);
            c[(2 * k + 1, 2 * k)] = Complex64::new(-1.0, 0.0);
        }
        Self { n, c }
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_diff(&self, other: &Self) -> f64 {
        (&self.c - &other.c).iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

/// `d_{z_i} d_{zbar_k} u` from the real Hessian. With
/// `z_m = x_{2m} + s_m x_{2m+1} i`, `s_m = (-1)^m`:
/// `d_z = (d_a - i s d_b)/2`, `d_zbar = (d_a + i s d_b)/2`.
fn complex_mixed(h: &DMatrix<f64>, i: usize, k: usize) -> Complex64 {
    let (ai, bi, si) = (2 * i, 2 * i + 1, frame_sign(i));
    let (ak, bk, sk) = (2 * k, 2 * k + 1, frame_sign(k));
    let re = h[(ai, ak)] + si * sk * h[(bi, bk)];
    let im = sk * h[(ai, bk)] - si * h[(bi, ak)];
    Complex64::new(0.25 * re, 0.25 * im)
}

/// Antisymmetrized coefficient array from a real Hessian:
/// `a[i][j] = (-1)^{j+1} d_{z_i} d_{zbar_{j'}} u` with `j' = j + (-1)^j`, and
/// `c = a - a^T`.
pub fn ddj_from_real_hessian(h: &DMatrix<f64>) -> TwoFormCoefficients {
    let m = h.nrows() / 2;
    let a = DMatrix::from_fn(m, m, |i, j| {
        let partner = j ^ 1;
        complex_mixed(h, i, partner) * -frame_sign(j)
    });
    let c = &a - a.transpose();
    TwoFormCoefficients { n: m / 2, c }
}

/// `dd_J u` coefficients at `p` by central differences with step `h`.
pub fn ddj_coefficients(u: &dyn ScalarField, p: &CoordinatePoint, h: f64) -> Result<TwoFormCoefficients> {
    Ok(ddj_from_real_hessian(&real_hessian_fd(u, p, h)?))
}

pub fn ddj_coefficients_exact(u: &dyn ScalarField, p: &CoordinatePoint) -> Result<TwoFormCoefficients> {
    Ok(ddj_from_real_hessian(&exact_real_hessian(u, p)?))
}

/// `n! / 4^n`.
pub fn ma_normalization(n: usize) -> f64 {
    (1..=n).map(|k| k as f64 / 4.0).product()
}

/// Density of `(dd_J u)^n` against `dz_0 ^ ... ^ dz_{2n-1}`:
/// `(n!/4^n) * moore_det(Hess(u, H))`.
pub fn ma_density(u: &dyn ScalarField, p: &CoordinatePoint, h: f64) -> Result<f64> {
    let hess = quaternionic_hessian(u, p, h)?;
    Ok(ma_normalization(p.dim()) * moore_det(&hess)?)
}

pub fn ma_density_exact(u: &dyn ScalarField, p: &CoordinatePoint) -> Result<f64> {
    let hess = quaternionic_hessian_exact(u, p)?;
    Ok(ma_normalization(p.dim()) * moore_det(&hess)?)
}

/// Smooth QPSH criterion: the quaternionic Hessian is positive semidefinite.
/// Non-finite samples count as a failure.
pub fn is_qpsh_pointwise(u: &dyn ScalarField, p: &CoordinatePoint, h: f64) -> bool {
    quaternionic_hessian(u, p, h).is_ok_and(|m| is_psd(&m))
}
