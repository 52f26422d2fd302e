//! Small fixed-size linear algebra: 2-vectors and 2×2 symmetric positive definite tensors.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Determinants at or below this value are treated as singular.
pub const DET_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    /// Unit vector at angle `theta` (radians, counterclockwise from +x).
    #[inline]
    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Vec2 { x: c, y: s }
    }

    #[inline]
    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Counterclockwise perpendicular.
    #[inline]
    pub fn perp(self) -> Vec2 {
        Vec2 { x: -self.y, y: self.x }
    }

    /// Rotate counterclockwise by `theta`.
    pub fn rotated(self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        Vec2 { x: c * self.x - s * self.y, y: s * self.x + c * self.y }
    }

    /// Outer product `self ⊗ self` as a symmetric tensor.
    #[inline]
    pub fn outer(self) -> Spd2 {
        Spd2 { m11: self.x * self.x, m12: self.x * self.y, m22: self.y * self.y }
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2 { x: self.x + o.x, y: self.y + o.y }
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2 { x: self.x - o.x, y: self.y - o.y }
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2 { x: -self.x, y: -self.y }
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, s: f64) -> Vec2 {
        Vec2 { x: self.x * s, y: self.y * s }
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    #[inline]
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

/// Symmetric 2×2 matrix `[[m11, m12], [m12, m22]]`.
///
/// The type itself does not enforce definiteness; fields built from it are
/// validated with [`Spd2::is_positive_definite`] at construction time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spd2 {
    pub m11: f64,
    pub m12: f64,
    pub m22: f64,
}

impl Spd2 {
    pub const IDENTITY: Spd2 = Spd2 { m11: 1.0, m12: 0.0, m22: 1.0 };

    #[inline]
    pub const fn new(m11: f64, m12: f64, m22: f64) -> Self {
        Spd2 { m11, m12, m22 }
    }

    pub const fn diag(a: f64, b: f64) -> Self {
        Spd2 { m11: a, m12: 0.0, m22: b }
    }

    #[inline]
    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m12
    }

    #[inline]
    pub fn trace(&self) -> f64 {
        self.m11 + self.m22
    }

    pub fn is_positive_definite(&self) -> bool {
        self.m11 > 0.0 && self.det() > 0.0 && self.m11.is_finite() && self.m22.is_finite()
    }

    #[inline]
    pub fn apply(&self, u: Vec2) -> Vec2 {
        Vec2 { x: self.m11 * u.x + self.m12 * u.y, y: self.m12 * u.x + self.m22 * u.y }
    }

    /// Quadratic form `⟨u, M u⟩`.
    #[inline]
    pub fn quad(&self, u: Vec2) -> f64 {
        self.m11 * u.x * u.x + 2.0 * self.m12 * u.x * u.y + self.m22 * u.y * u.y
    }

    /// Bilinear form `⟨u, M v⟩`.
    #[inline]
    pub fn bilinear(&self, u: Vec2, v: Vec2) -> f64 {
        self.m11 * u.x * v.x + self.m12 * (u.x * v.y + u.y * v.x) + self.m22 * u.y * v.y
    }

    /// `‖u‖_M = √⟨u, M u⟩`.
    #[inline]
    pub fn norm(&self, u: Vec2) -> f64 {
        self.quad(u).max(0.0).sqrt()
    }

    pub fn inverse(&self) -> Result<Spd2> {
        let det = self.det();
        if !(det > DET_FLOOR) {
            return Err(Error::DegenerateTensor { det });
        }
        Ok(Spd2 { m11: self.m22 / det, m12: -self.m12 / det, m22: self.m11 / det })
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let half_tr = 0.5 * self.trace();
        let half_diff = 0.5 * (self.m11 - self.m22);
        let r = half_diff.hypot(self.m12);
        (half_tr - r, half_tr + r)
    }

    pub fn scaled(&self, s: f64) -> Spd2 {
        Spd2 { m11: self.m11 * s, m12: self.m12 * s, m22: self.m22 * s }
    }
}

impl Add for Spd2 {
    type Output = Spd2;
    fn add(self, o: Spd2) -> Spd2 {
        Spd2 { m11: self.m11 + o.m11, m12: self.m12 + o.m12, m22: self.m22 + o.m22 }
    }
}

/// `‖u‖_M`, see [`Spd2::norm`].
pub fn spd_norm(m: &Spd2, u: Vec2) -> f64 {
    m.norm(u)
}

/// Inverse of a 2×2 SPD tensor; fails when the determinant is not above [`DET_FLOOR`].
pub fn spd_inverse(m: &Spd2) -> Result<Spd2> {
    m.inverse()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const SKEWED: Spd2 = Spd2 { m11: 15.625, m12: 14.625, m22: 15.625 };

    #[test]
    fn norm_examples() {
        assert_eq!(spd_norm(&Spd2::IDENTITY, Vec2::new(3.0, 4.0)), 5.0);
        assert_eq!(spd_norm(&Spd2::diag(4.0, 1.0), Vec2::new(1.0, 0.0)), 2.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // 0.5 * (15.625 + 2*14.625 + 15.625) = 30.25
        assert_abs_diff_eq!(spd_norm(&SKEWED, Vec2::new(h, h)), 5.5, epsilon = 1e-12);
        assert_eq!(spd_norm(&SKEWED, Vec2::ZERO), 0.0);
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(spd_inverse(&Spd2::IDENTITY).unwrap(), Spd2::IDENTITY);
        assert_eq!(spd_inverse(&Spd2::diag(4.0, 1.0)).unwrap(), Spd2::diag(0.25, 1.0));
        let inv = spd_inverse(&SKEWED).unwrap();
        for e in [Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)] {
            let back = SKEWED.apply(inv.apply(e));
            assert_abs_diff_eq!(back.x, e.x, epsilon = 1e-12);
            assert_abs_diff_eq!(back.y, e.y, epsilon = 1e-12);
        }
    }

    #[test]
    fn singular_tensor_rejected() {
        assert!(matches!(Spd2::new(1.0, 1.0, 1.0).inverse(), Err(Error::DegenerateTensor { .. })));
        assert!(Spd2::new(0.0, 0.0, 0.0).inverse().is_err());
    }

    #[test]
    fn eigenvalues_of_skewed_tensor() {
        let (lo, hi) = SKEWED.eigenvalues();
        assert_abs_diff_eq!(lo, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, 30.25, epsilon = 1e-12);
    }

    fn spd_strategy() -> impl Strategy<Value = Spd2> {
        (0.1f64..10.0, 0.1f64..10.0, 0.0f64..std::f64::consts::PI).prop_map(|(a, b, t)| {
            let e = Vec2::from_angle(t);
            e.outer().scaled(a) + e.perp().outer().scaled(b)
        })
    }

    proptest! {
        #[test]
        fn norm_is_even(m in spd_strategy(), x in -10.0f64..10.0, y in -10.0f64..10.0) {
            let u = Vec2::new(x, y);
            prop_assert_eq!(m.norm(u), m.norm(-u));
        }

        #[test]
        fn eigenvalues_positive(m in spd_strategy()) {
            let (lo, _) = m.eigenvalues();
            prop_assert!(lo > 0.0);
            prop_assert!(m.is_positive_definite());
        }

        #[test]
        fn dual_norm_cauchy_schwarz(m in spd_strategy(), x in -10.0f64..10.0, y in -10.0f64..10.0) {
            let u = Vec2::new(x, y);
            let inv = m.inverse().unwrap();
            let mu = m.apply(u);
            // ‖Mu‖_{M⁻¹} = ‖u‖_M, so the product equals ⟨u, Mu⟩ up to rounding
            let lhs = inv.norm(mu) * m.norm(u);
            let rhs = u.dot(mu);
            prop_assert!(lhs >= rhs - 1e-9 * (1.0 + rhs.abs()));
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
        }
    }
}
