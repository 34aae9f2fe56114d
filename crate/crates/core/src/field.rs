//! Coordinates on `H^n` and real-valued fields over them.
//!
//! A point of `H^n` is stored through its real frame `x_0..x_{4n-1}` with
//! `q_a = x_{4a} + x_{4a+1} i + x_{4a+2} j + x_{4a+3} k`. The complex frame
//! is `z_m = x_{2m} + (-1)^m x_{2m+1} i`, so that `q_a = z_{2a} + j z_{2a+1}`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::{CheckedAdd, CheckedMul, One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::quat::Quaternion;

/// A point of `H^n` in the real frame.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinatePoint {
    n: usize,
    x: Vec<f64>,
}

impl CoordinatePoint {
    pub fn new(n: usize, x: Vec<f64>) -> Result<Self> {
        if x.len() != 4 * n {
            return Err(Error::Dimension {
                expected: 4 * n,
                got: x.len(),
            });
        }
        Ok(Self { n, x })
    }

    pub fn origin(n: usize) -> Self {
        Self { n, x: vec![0.0; 4 * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn real(&self) -> &[f64] {
        &self.x
    }

    pub fn norm(&self) -> f64 {
        self.x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn from_quaternions(q: &[Quaternion]) -> Self {
        Self {
            n: q.len(),
            x: q.iter().flat_map(|q| q.to_array()).collect(),
        }
    }

    pub fn to_quaternions(&self) -> Vec<Quaternion> {
        self.x
            .chunks_exact(4)
            .map(|c| Quaternion::new(c[0], c[1], c[2], c[3]))
            .collect()
    }

    /// `z_m = x_{2m} + (-1)^m x_{2m+1} i`, `m = 0..2n`.
    pub fn to_complex(&self) -> Vec<Complex64> {
        self.x
            .chunks_exact(2)
            .enumerate()
            .map(|(m, c)| Complex64::new(c[0], frame_sign(m) * c[1]))
            .collect()
    }

    pub fn from_complex(z: &[Complex64]) -> Result<Self> {
        if z.len() % 2 != 0 {
            return Err(Error::Dimension {
                expected: z.len() + 1,
                got: z.len(),
            });
        }
        let x = z
            .iter()
            .enumerate()
            .flat_map(|(m, z)| [z.re, frame_sign(m) * z.im])
            .collect();
        Ok(Self { n: z.len() / 2, x })
    }
}

/// `(-1)^m`.
pub(crate) fn frame_sign(m: usize) -> f64 {
    if m % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// A real-valued function on `R^{4n}`.
pub trait ScalarField: Send + Sync {
    /// Quaternionic dimension `n`.
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> f64;

    /// Exact real Hessian `d^2 u / dx_a dx_b`, when the field can supply one.
    fn exact_hessian(&self, _x: &[f64]) -> Option<DMatrix<f64>> {
        None
    }

    /// Exact Laplacian over `R^{4n}`, when available.
    fn exact_laplacian(&self, x: &[f64]) -> Option<f64> {
        self.exact_hessian(x).map(|h| h.trace())
    }
}

/// A field backed by a closure.
#[derive(Clone)]
pub struct FnField {
    n: usize,
    f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl FnField {
    pub fn new(n: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { n, f: Arc::new(f) }
    }
}

impl fmt::Debug for FnField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnField").field("n", &self.n).finish_non_exhaustive()
    }
}

impl ScalarField for FnField {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// Multivariate polynomial with rational coefficients in the real frame
/// variables `x_0..x_{4n-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    n: usize,
    /// exponent vector -> coefficient, zero coefficients are never stored
    terms: BTreeMap<Vec<u32>, Rational64>,
}

impl Polynomial {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: Rational64) -> Self {
        let mut p = Self::zero(n);
        p.add_term(vec![0; 4 * n], c);
        p
    }

    /// The coordinate `x_var`.
    pub fn var(n: usize, var: usize) -> Result<Self> {
        if var >= 4 * n {
            return Err(Error::FrameIndex {
                index: var,
                len: 4 * n,
            });
        }
        let mut e = vec![0; 4 * n];
        e[var] = 1;
        let mut p = Self::zero(n);
        p.add_term(e, Rational64::one());
        Ok(p)
    }

    /// Builds from `(coefficient, exponents)` pairs; like terms are merged.
    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (Rational64, Vec<u32>)>) -> Result<Self> {
        let mut p = Self::zero(n);
        for (c, e) in terms {
            if e.len() != 4 * n {
                return Err(Error::Dimension {
                    expected: 4 * n,
                    got: e.len(),
                });
            }
            p.checked_add_term(e, c)?;
        }
        Ok(p)
    }

    fn add_term(&mut self, e: Vec<u32>, c: Rational64) {
        self.checked_add_term(e, c).expect("coefficient overflow");
    }

    fn checked_add_term(&mut self, e: Vec<u32>, c: Rational64) -> Result<()> {
        if c.is_zero() {
            return Ok(());
        }
        let sum = match self.terms.get(&e) {
            Some(old) => old.checked_add(&c).ok_or_else(overflow)?,
            None => c,
        };
        if sum.is_zero() {
            self.terms.remove(&e);
        } else {
            self.terms.insert(e, sum);
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nvars(&self) -> usize {
        4 * self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Rational64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.checked_add_term(e.clone(), *c)?;
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.checked_add(&other.scaled(-Rational64::one())?)
    }

    pub fn scaled(&self, s: Rational64) -> Result<Self> {
        let mut out = Self::zero(self.n);
        for (e, c) in &self.terms {
            out.checked_add_term(e.clone(), c.checked_mul(&s).ok_or_else(overflow)?)?;
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        let mut out = Self::zero(self.n);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.checked_add_term(e, ca.checked_mul(cb).ok_or_else(overflow)?)?;
            }
        }
        Ok(out)
    }

    pub fn checked_pow(&self, k: u32) -> Result<Self> {
        let mut acc = Self::constant(self.n, Rational64::one());
        for _ in 0..k {
            acc = acc.checked_mul(self)?;
        }
        Ok(acc)
    }

    /// Partial derivative with respect to `x_var`.
    pub fn derivative(&self, var: usize) -> Self {
        let mut out = Self::zero(self.n);
        for (e, c) in &self.terms {
            let k = e[var];
            if k == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[var] -= 1;
            out.add_term(e2, *c * Rational64::from_integer(k as i64));
        }
        out
    }

    pub fn laplacian(&self) -> Self {
        let mut out = Self::zero(self.n);
        for v in 0..self.nvars() {
            let d2 = self.derivative(v).derivative(v);
            out = out.checked_add(&d2).expect("coefficient overflow");
        }
        out
    }

    fn same_dim(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: other.n,
            });
        }
        Ok(())
    }

    fn eval_terms(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                let mono: f64 = e
                    .iter()
                    .zip(x)
                    .filter(|(k, _)| **k > 0)
                    .map(|(k, v)| v.powi(*k as i32))
                    .product();
                c.to_f64().unwrap_or(f64::NAN) * mono
            })
            .sum()
    }
}

fn overflow() -> Error {
    Error::InvalidArgument("rational coefficient overflow".into())
}

impl ScalarField for Polynomial {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.eval_terms(x)
    }

    fn exact_hessian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        let m = self.nvars();
        let first: Vec<Polynomial> = (0..m).map(|a| self.derivative(a)).collect();
        let mut h = DMatrix::zeros(m, m);
        for a in 0..m {
            for b in a..m {
                let v = first[a].derivative(b).eval_terms(x);
                h[(a, b)] = v;
                h[(b, a)] = v;
            }
        }
        Some(h)
    }

    fn exact_laplacian(&self, x: &[f64]) -> Option<f64> {
        Some(self.laplacian().eval_terms(x))
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms.iter().rev().enumerate() {
            let neg = *c < Rational64::zero();
            let mag = if neg { -*c } else { *c };
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            let vars: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, k)| **k > 0)
                .map(|(v, k)| if *k == 1 { format!("x{v}") } else { format!("x{v}^{k}") })
                .collect();
            if vars.is_empty() || !mag.is_one() {
                write!(f, "{mag}")?;
                if !vars.is_empty() {
                    write!(f, "*")?;
                }
            }
            write!(f, "{}", vars.join("*"))?;
        }
        Ok(())
    }
}

/// `|q|^2 = sum_m x_m^2` on `H^n`.
pub fn norm_squared(n: usize) -> Polynomial {
    let terms = (0..4 * n).map(|v| {
        let mut e = vec![0; 4 * n];
        e[v] = 2;
        (Rational64::one(), e)
    });
    Polynomial::from_terms(n, terms).expect("well-formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(a: i64, b: i64) -> Rational64 {
        Rational64::new(a, b)
    }

    #[test]
    fn quaternion_and_complex_frames_agree() {
        let p = CoordinatePoint::new(2, (0..8).map(|v| v as f64 + 0.5).collect()).unwrap();
        let q = p.to_quaternions();
        let z = p.to_complex();
        for (a, qa) in q.iter().enumerate() {
            // q_a = z_{2a} + j z_{2a+1}
            let za = z[2 * a];
            let zb = z[2 * a + 1];
            let jzb = Quaternion::J * Quaternion::new(zb.re, zb.im, 0.0, 0.0);
            let rebuilt = Quaternion::new(za.re, za.im, 0.0, 0.0) + jzb;
            assert!(rebuilt.dist_max(*qa) < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn coordinate_round_trips_are_exact(x in proptest::collection::vec(-5.0..5.0f64, 12)) {
            let p = CoordinatePoint::new(3, x.clone()).unwrap();
            let back_q = CoordinatePoint::from_quaternions(&p.to_quaternions());
            prop_assert_eq!(back_q.real(), &x[..]);
            let back_z = CoordinatePoint::from_complex(&p.to_complex()).unwrap();
            prop_assert_eq!(back_z.real(), &x[..]);
        }
    }

    #[test]
    fn polynomial_arithmetic_and_derivatives() {
        let x0 = Polynomial::var(1, 0).unwrap();
        let x1 = Polynomial::var(1, 1).unwrap();
        // (x0 + x1)^2 - 2 x0 x1 = x0^2 + x1^2
        let p = x0.checked_add(&x1).unwrap().checked_pow(2).unwrap();
        let q = p
            .checked_sub(&x0.checked_mul(&x1).unwrap().scaled(r(2, 1)).unwrap())
            .unwrap();
        assert_eq!(q.degree(), 2);
        assert_eq!(q.laplacian(), Polynomial::constant(1, r(4, 1)));
        assert_eq!(q.eval(&[1.5, -2.0, 9.0, 9.0]), 1.5 * 1.5 + 4.0);
        assert_eq!(q.to_string(), "x0^2 + x1^2");
    }

    #[test]
    fn exact_hessian_of_cross_term() {
        let p = Polynomial::from_terms(1, [(r(3, 2), vec![1, 1, 0, 0])]).unwrap();
        let h = p.exact_hessian(&[0.0; 4]).unwrap();
        assert_eq!(h[(0, 1)], 1.5);
        assert_eq!(h[(1, 0)], 1.5);
        assert_eq!(h[(0, 0)], 0.0);
    }

    #[test]
    fn cancellation_removes_terms() {
        let x0 = Polynomial::var(1, 0).unwrap();
        assert!(x0.checked_sub(&x0).unwrap().is_zero());
        assert_eq!(Polynomial::zero(1).to_string(), "0");
    }

    #[test]
    fn norm_squared_has_laplacian_eight_n() {
        assert_eq!(norm_squared(2).exact_laplacian(&[0.3; 8]), Some(16.0));
    }

    #[test]
    fn var_out_of_range() {
        assert!(matches!(Polynomial::var(1, 4), Err(Error::FrameIndex { index: 4, len: 4 })));
    }
}
