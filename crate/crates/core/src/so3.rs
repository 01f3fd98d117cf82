//! The Lie algebra so(3) realised as R^3.
//!
//! The commutator becomes the cross product and the pairing is the dot
//! product (the Killing form scaled by -1/2), so momenta, angular velocities
//! and noise axes all live in the same [`BodyVector`] type.

use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Rotation angles below this use Taylor expansions of sin and 1 - cos.
const SERIES_ANGLE: f64 = 0.125;

/// Element of so(3) ~ R^3 in body-frame coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BodyVector<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Scalar> BodyVector<T> {
    #[inline]
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    /// Standard basis vector `e_{axis+1}`, `axis` in `0..3`.
    pub fn basis(axis: usize) -> Self {
        let mut v = [T::zero(); 3];
        v[axis] = T::one();
        Self::from_array(v)
    }

    #[inline]
    pub fn from_array(a: [T; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    #[inline]
    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn cross(self, other: Self) -> Self {
        Self::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    #[inline]
    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    #[inline]
    pub fn norm_squared(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.norm_squared().sqrt()
    }

    #[inline]
    pub fn scale(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Component orthogonal to `normal` (which need not be unit length).
    pub fn reject_from(self, normal: Self) -> Self {
        let nn = normal.norm_squared();
        if nn == T::zero() {
            return self;
        }
        self - normal.scale(self.dot(normal) / nn)
    }

    /// Converts between scalar types.
    pub fn cast<U: Scalar>(self) -> BodyVector<U> {
        BodyVector::new(
            U::lit(self.x.to_f64_lossy()),
            U::lit(self.y.to_f64_lossy()),
            U::lit(self.z.to_f64_lossy()),
        )
    }
}

impl<T: Scalar> Add for BodyVector<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Scalar> AddAssign for BodyVector<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Scalar> Sub for BodyVector<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Scalar> Neg for BodyVector<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<T: Scalar> Mul<T> for BodyVector<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        self.scale(s)
    }
}

impl<T> Index<usize> for BodyVector<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("BodyVector index {i} out of range"),
        }
    }
}

/// Lie bracket of so(3): `a x b`.
#[inline]
pub fn cross<T: Scalar>(a: BodyVector<T>, b: BodyVector<T>) -> BodyVector<T> {
    a.cross(b)
}

/// Pairing `a . b = -kappa(a, b) / 2`.
#[inline]
pub fn pairing<T: Scalar>(a: BodyVector<T>, b: BodyVector<T>) -> T {
    a.dot(b)
}

/// `sin(angle)` and `1 - cos(angle)` without cancellation for small angles.
/// Below [`SERIES_ANGLE`] both come from their Taylor series, truncated
/// where the remainder is under one ulp; this is also the fast path for the
/// small per-step rotations of the integrator.
#[inline]
fn sin_and_versine<T: Scalar>(angle: T) -> (T, T) {
    if angle.abs() < T::lit(SERIES_ANGLE) {
        let a2 = angle * angle;
        let one = T::one();
        let term = |k: f64| a2 / T::lit(k);
        let s = angle
            * (one
                - term(6.0)
                    * (one
                        - term(20.0)
                            * (one - term(42.0) * (one - term(72.0) * (one - term(110.0))))));
        let v = a2 / T::lit(2.0)
            * (one
                - term(12.0)
                    * (one
                        - term(30.0)
                            * (one - term(56.0) * (one - term(90.0) * (one - term(132.0))))));
        (s, v)
    } else {
        let (s, c) = angle.sin_cos();
        // s^2 / (1 + c) avoids the cancellation in 1 - c while c > 0
        let vers = if c > T::zero() {
            s * s / (T::one() + c)
        } else {
            T::one() - c
        };
        (s, vers)
    }
}

/// Rotates `v` about `axis` by `angle` radians (right-handed, Rodrigues).
///
/// The derivative of the result with respect to `angle` at zero is
/// `axis_hat x v`. A zero angle returns `v` unchanged.
pub fn rotate<T: Scalar>(v: BodyVector<T>, axis: BodyVector<T>, angle: T) -> Result<BodyVector<T>> {
    let len = axis.norm();
    if !(len > T::zero()) || !len.is_finite() {
        return Err(Error::DegenerateAxis);
    }
    if angle == T::zero() {
        return Ok(v);
    }
    let n = axis.scale(T::one() / len);
    let (s, vers) = sin_and_versine(angle);
    let c = T::one() - vers;
    Ok(v.scale(c) + n.cross(v).scale(s) + n.scale(n.dot(v) * vers))
}

/// Rotation about a coordinate axis `e_{axis+1}`; the fast path used by the
/// splitting integrator. Agrees with [`rotate`] for `axis = basis(axis)`.
#[inline]
pub fn rotate_about_basis<T: Scalar>(v: BodyVector<T>, axis: usize, angle: T) -> BodyVector<T> {
    if angle == T::zero() {
        return v;
    }
    let (s, vers) = sin_and_versine(angle);
    let c = T::one() - vers;
    match axis {
        0 => BodyVector::new(v.x, v.y * c - v.z * s, v.y * s + v.z * c),
        1 => BodyVector::new(v.x * c + v.z * s, v.y, v.z * c - v.x * s),
        2 => BodyVector::new(v.x * c - v.y * s, v.x * s + v.y * c, v.z),
        _ => panic!("axis {axis} out of range"),
    }
}

/// Draws a point uniformly distributed on the sphere `|v| = radius` by
/// normalising three independent standard normals.
pub fn sample_uniform_sphere<T: Scalar, R: Rng + ?Sized>(radius: T, rng: &mut R) -> BodyVector<T> {
    loop {
        let g: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let n2 = g[0] * g[0] + g[1] * g[1] + g[2] * g[2];
        if n2 > 1e-300 {
            let s = radius.to_f64_lossy() / n2.sqrt();
            return BodyVector::new(T::lit(g[0] * s), T::lit(g[1] * s), T::lit(g[2] * s));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    type V = BodyVector<f64>;

    fn v(x: f64, y: f64, z: f64) -> V {
        V::new(x, y, z)
    }

    fn close(a: V, b: V, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
    }

    #[test]
    fn cross_examples() {
        assert_eq!(cross(v(1., 0., 0.), v(0., 1., 0.)), v(0., 0., 1.));
        let a = v(0.3, -1.7, 2.2);
        assert_eq!(cross(a, a), V::zero());
        assert_eq!(cross(v(1., 1., 0.), v(1., 0.5, 0.)), v(0., 0., -0.5));
    }

    #[test]
    fn pairing_examples() {
        assert_eq!(pairing(v(1., 2., 3.), v(1., 2., 3.)), 14.0);
        assert_eq!(pairing(v(1., 0., 0.), v(0., 5., 7.)), 0.0);
        let a = v(0.4, 1.1, -0.9);
        let b = v(-2.0, 0.5, 0.25);
        assert!(pairing(a, cross(a, b)).abs() < 1e-15);
    }

    #[test]
    fn rotate_examples() {
        let r = rotate(v(1., 0., 0.), v(0., 0., 1.), std::f64::consts::FRAC_PI_2).unwrap();
        assert!(close(r, v(0., 1., 0.), 1e-15));
        let w = v(0.1, -0.2, 0.3);
        assert_eq!(rotate(w, v(1., 2., 3.), 0.0).unwrap(), w);
        let z = rotate(v(0., 0., 1.), v(0., 0., 1.), 1.234).unwrap();
        assert!(close(z, v(0., 0., 1.), 1e-15));
    }

    #[test]
    fn rotate_rejects_zero_axis() {
        assert!(matches!(
            rotate(v(1., 0., 0.), V::zero(), 0.5),
            Err(Error::DegenerateAxis)
        ));
    }

    #[test]
    fn small_angle_branch_is_continuous() {
        let w = v(0.3, 0.5, -0.8);
        let axis = v(0.2, -1.0, 0.4);
        let below = rotate(w, axis, 0.125 - 1e-12).unwrap();
        let above = rotate(w, axis, 0.125 + 1e-12).unwrap();
        assert!((below - above).norm() < 1e-11);
        for a in [1e-9_f64, 1e-4, 0.05, 0.1249] {
            let (s, v) = sin_and_versine(a);
            assert!((s - a.sin()).abs() <= 2e-16 * a);
            assert!((v - 2.0 * (a / 2.0).sin().powi(2)).abs() <= 4e-16 * v);
        }
        // first-order term is axis_hat x w
        let a = 1e-9;
        let expected = w + cross(axis.scale(1.0 / axis.norm()), w).scale(a);
        assert!(close(rotate(w, axis, a).unwrap(), expected, 1e-17));
    }

    #[test]
    fn basis_rotation_matches_rodrigues() {
        let w = v(0.3, 0.5, -0.8);
        for axis in 0..3 {
            for &angle in &[1e-10, 0.37, -2.1, 3.0] {
                let a = rotate_about_basis(w, axis, angle);
                let b = rotate(w, V::basis(axis), angle).unwrap();
                assert!(close(a, b, 1e-15), "axis {axis} angle {angle}");
            }
        }
    }

    #[test]
    fn uniform_sphere_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let mut mean = V::zero();
        let mut north = 0usize;
        for _ in 0..n {
            let p: V = sample_uniform_sphere(1.0, &mut rng);
            assert!((p.norm() - 1.0).abs() < 1e-14);
            mean += p;
            if p.z > 0.0 {
                north += 1;
            }
        }
        let mean = mean.scale(1.0 / n as f64);
        let bound = 4.0 / (n as f64).sqrt();
        assert!(mean.x.abs() < bound && mean.y.abs() < bound && mean.z.abs() < bound);
        assert!((north as f64 / n as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn f32_rotation_preserves_norm() {
        let w = BodyVector::<f32>::new(0.3, 0.5, -0.8);
        let r = rotate(w, BodyVector::new(1.0, 1.0, 0.0), 0.7f32).unwrap();
        assert!((r.norm() - w.norm()).abs() < 1e-6);
    }

    fn arb_vec() -> impl Strategy<Value = V> {
        (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64).prop_map(|(x, y, z)| v(x, y, z))
    }

    proptest! {
        #[test]
        fn jacobi_identity(a in arb_vec(), b in arb_vec(), c in arb_vec()) {
            let j = cross(a, cross(b, c)) + cross(b, cross(c, a)) + cross(c, cross(a, b));
            let scale = a.norm() * b.norm() * c.norm() + 1.0;
            prop_assert!(j.norm() <= 1e-12 * scale);
        }

        #[test]
        fn cross_is_bilinear_and_antisymmetric(a in arb_vec(), b in arb_vec(), c in arb_vec(), s in -3.0..3.0f64) {
            let lhs = cross(a.scale(s) + b, c);
            let rhs = cross(a, c).scale(s) + cross(b, c);
            prop_assert!(close(lhs, rhs, 1e-12));
            prop_assert!(close(cross(a, b), -cross(b, a), 1e-15));
        }

        #[test]
        fn rotation_inverse(w in arb_vec(), n in arb_vec(), angle in -6.0..6.0f64) {
            prop_assume!(n.norm() > 1e-3);
            let back = rotate(rotate(w, n, angle).unwrap(), n, -angle).unwrap();
            prop_assert!((back - w).norm() <= 1e-13 * (1.0 + w.norm()));
        }

        #[test]
        fn rotation_preserves_pairing(a in arb_vec(), b in arb_vec(), n in arb_vec(), angle in -6.0..6.0f64) {
            prop_assume!(n.norm() > 1e-3);
            let ra = rotate(a, n, angle).unwrap();
            let rb = rotate(b, n, angle).unwrap();
            let scale = a.norm() * b.norm() + 1e-300;
            assert_relative_eq!(pairing(ra, rb) / scale, pairing(a, b) / scale, epsilon = 1e-12);
        }
    }
}
