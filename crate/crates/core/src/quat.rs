//! Real quaternions `w + x i + y j + z k`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A quaternion stored in `(w, x, y, z)` order, i.e. the real part first and
/// then the `i`, `j`, `k` components. This matches the real frame
/// `x_{4a}, x_{4a+1}, x_{4a+2}, x_{4a+3}` of one quaternionic coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const ZERO: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Quaternion = Quaternion::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub const fn real(w: f64) -> Self {
        Self::new(w, 0.0, 0.0, 0.0)
    }

    /// Basis element `e_a` for `a` in `0..4` (`1, i, j, k`).
    pub fn basis(a: usize) -> Self {
        match a {
            0 => Self::ONE,
            1 => Self::I,
            2 => Self::J,
            3 => Self::K,
            _ => panic!("quaternion basis index {a} out of range"),
        }
    }

    pub fn from_array(c: [f64; 4]) -> Self {
        Self::new(c[0], c[1], c[2], c[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn conj(self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    /// `|q|^2 = q conj(q)`.
    pub fn norm_sqr(self) -> f64 {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }

    /// Largest absolute value among the imaginary components.
    pub fn imag_abs_max(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    /// Componentwise maximum absolute difference.
    pub fn dist_max(self, other: Self) -> f64 {
        let d = self - other;
        d.w.abs().max(d.imag_abs_max())
    }

    /// Split `q = a + b j` into the complex pair `(a, b)` with
    /// `a = w + x i`, `b = y + z i`.
    pub fn complex_pair(self) -> (num_complex::Complex64, num_complex::Complex64) {
        (
            num_complex::Complex64::new(self.w, self.x),
            num_complex::Complex64::new(self.y, self.z),
        )
    }
}

/// Hamilton product.
pub fn qmul(a: Quaternion, b: Quaternion) -> Quaternion {
    Quaternion::new(
        a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
        a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
        a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
        a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
    )
}

impl Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, rhs: Quaternion) -> Quaternion {
        qmul(self, rhs)
    }
}

impl Mul<f64> for Quaternion {
    type Output = Quaternion;
    fn mul(self, rhs: f64) -> Quaternion {
        self.scale(rhs)
    }
}

impl Add for Quaternion {
    type Output = Quaternion;
    fn add(self, rhs: Quaternion) -> Quaternion {
        Quaternion::new(self.w + rhs.w, self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl AddAssign for Quaternion {
    fn add_assign(&mut self, rhs: Quaternion) {
        *self = *self + rhs;
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;
    fn sub(self, rhs: Quaternion) -> Quaternion {
        Quaternion::new(self.w - rhs.w, self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const I: Quaternion = Quaternion::I;
    const J: Quaternion = Quaternion::J;
    const K: Quaternion = Quaternion::K;
    const ONE: Quaternion = Quaternion::ONE;

    #[test]
    fn multiplication_table() {
        assert_eq!(I * I, -ONE);
        assert_eq!(J * J, -ONE);
        assert_eq!(K * K, -ONE);
        assert_eq!(I * J * K, -ONE);
        assert_eq!(qmul(I, J), K);
        assert_eq!(qmul(J, I), -K);
        assert_eq!(J * K, I);
        assert_eq!(K * I, J);
    }

    #[test]
    fn distributed_product() {
        // (1 + i)(1 + j) = 1 + j + i + ij = 1 + i + j + k
        let p = qmul(ONE + I, ONE + J);
        assert_eq!(p, Quaternion::new(1.0, 1.0, 1.0, 1.0));
    }

    fn arb_quat() -> impl Strategy<Value = Quaternion> {
        (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64)
            .prop_map(|(w, x, y, z)| Quaternion::new(w, x, y, z))
    }

    proptest! {
        #[test]
        fn conj_is_involution(q in arb_quat()) {
            prop_assert_eq!(q.conj().conj(), q);
        }

        #[test]
        fn norm_is_real_product(q in arb_quat()) {
            let p = q * q.conj();
            prop_assert!(p.imag_abs_max() < 1e-12);
            prop_assert!((p.w - q.norm_sqr()).abs() < 1e-12);
            prop_assert!(q.norm_sqr() >= 0.0);
        }

        #[test]
        fn conj_reverses_products(a in arb_quat(), b in arb_quat()) {
            let lhs = (a * b).conj();
            let rhs = b.conj() * a.conj();
            prop_assert!(lhs.dist_max(rhs) < 1e-12);
        }

        #[test]
        fn product_is_associative(a in arb_quat(), b in arb_quat(), c in arb_quat()) {
            prop_assert!(((a * b) * c).dist_max(a * (b * c)) < 1e-10);
        }
    }
}
