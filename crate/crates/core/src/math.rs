//! Minimal 3-vector and unit-quaternion algebra.
//!
//! Frame: right-handed, `y` up, `+z` toward the display center, `+x` to the
//! right of a user facing the display. Quaternions use the Hamilton
//! convention and `a * b` applies `b` first.

use std::ops::{Add, Mul, Neg, Sub};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Scalar> Vec3<T> {
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn unit_z() -> Self {
        Self::new(T::zero(), T::zero(), T::one())
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }

    pub fn scale(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    /// Returns `None` for (near) zero vectors.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n > T::epsilon() && n.is_finite() {
            Some(self.scale(T::one() / n))
        } else {
            None
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl<T: Scalar> Add for Vec3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Scalar> Sub for Vec3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Scalar> Neg for Vec3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

/// Unit quaternion representing a 3D rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation<T> {
    pub w: T,
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Scalar> Default for Rotation<T> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<T: Scalar> Rotation<T> {
    pub fn identity() -> Self {
        Self { w: T::one(), x: T::zero(), y: T::zero(), z: T::zero() }
    }

    /// Rotation by `angle` radians about `axis` (need not be normalized).
    /// A zero axis yields the identity.
    pub fn from_angle_axis(angle: T, axis: Vec3<T>) -> Self {
        match axis.normalized() {
            Some(u) => {
                let half = angle / T::lit(2.0);
                let s = half.sin();
                Self { w: half.cos(), x: u.x * s, y: u.y * s, z: u.z * s }
            }
            None => Self::identity(),
        }
    }

    /// Decomposes into `(angle, axis)` with `angle ∈ [0, π]`. The identity maps
    /// to angle 0 about `+x`.
    pub fn to_angle_axis(self) -> (T, Vec3<T>) {
        // q and -q are the same rotation; pick the short way round.
        let q = if self.w < T::zero() { -self } else { self };
        let v = Vec3::new(q.x, q.y, q.z);
        let s = v.norm();
        if s <= T::epsilon() {
            return (T::zero(), Vec3::new(T::one(), T::zero(), T::zero()));
        }
        let angle = T::lit(2.0) * s.atan2(q.w);
        (angle, v.scale(T::one() / s))
    }

    /// Shortest rotation carrying direction `from` onto direction `to`.
    /// Opposite directions turn about any axis perpendicular to `from`.
    pub fn between(from: Vec3<T>, to: Vec3<T>) -> Self {
        let (Some(a), Some(b)) = (from.normalized(), to.normalized()) else {
            return Self::identity();
        };
        let angle = a.dot(b).max(-T::one()).min(T::one()).acos();
        let axis = a.cross(b);
        if axis.norm() > T::epsilon() {
            return Self::from_angle_axis(angle, axis);
        }
        if angle < T::FRAC_PI_2() {
            return Self::identity();
        }
        let side = if a.x.abs() < T::lit(0.9) { Vec3::new(T::one(), T::zero(), T::zero()) } else { Vec3::new(T::zero(), T::one(), T::zero()) };
        Self::from_angle_axis(T::PI(), a.cross(side))
    }

    /// Orientation whose forward (`+z`) axis points at the given yaw and pitch.
    /// Yaw is positive toward `+x`, pitch positive upward.
    pub fn from_yaw_pitch(yaw: T, pitch: T) -> Self {
        let up = Vec3::new(T::zero(), T::one(), T::zero());
        let right = Vec3::new(T::one(), T::zero(), T::zero());
        Self::from_angle_axis(yaw, up) * Self::from_angle_axis(-pitch, right)
    }

    /// Yaw-then-pitch decomposition of the forward axis, both in `(-π, π]`.
    /// Roll is discarded.
    pub fn yaw_pitch(self) -> (T, T) {
        let f = self.forward();
        let yaw = f.x.atan2(f.z);
        let pitch = f.y.max(-T::one()).min(T::one()).asin();
        (yaw, pitch)
    }

    pub fn conjugate(self) -> Self {
        Self { w: self.w, x: -self.x, y: -self.y, z: -self.z }
    }

    /// Inverse of a unit quaternion.
    pub fn inverse(self) -> Self {
        self.conjugate()
    }

    pub fn norm(self) -> T {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalized(self) -> Self {
        let n = self.norm();
        if n <= T::epsilon() {
            return Self::identity();
        }
        let k = T::one() / n;
        Self { w: self.w * k, x: self.x * k, y: self.y * k, z: self.z * k }
    }

    pub fn rotate(self, v: Vec3<T>) -> Vec3<T> {
        let u = Vec3::new(self.x, self.y, self.z);
        let t = u.cross(v).scale(T::lit(2.0));
        v + t.scale(self.w) + u.cross(t)
    }

    /// The pointing direction (`+z` rotated).
    pub fn forward(self) -> Vec3<T> {
        self.rotate(Vec3::unit_z())
    }

    /// Angle of the relative rotation between two orientations, in `[0, π]`.
    pub fn angle_to(self, other: Self) -> T {
        (other * self.inverse()).to_angle_axis().0
    }
}

impl<T: Scalar> Neg for Rotation<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self { w: -self.w, x: -self.x, y: -self.y, z: -self.z }
    }
}

impl<T: Scalar> Mul for Rotation<T> {
    type Output = Self;
    fn mul(self, r: Self) -> Self {
        Self {
            w: self.w * r.w - self.x * r.x - self.y * r.y - self.z * r.z,
            x: self.w * r.x + self.x * r.w + self.y * r.z - self.z * r.y,
            y: self.w * r.y - self.x * r.z + self.y * r.w + self.z * r.x,
            z: self.w * r.z + self.x * r.y - self.y * r.x + self.z * r.w,
        }
    }
}
