//! The semi-circular display modelled as a vertical cylinder segment.
//!
//! World frame: origin at the curvature center on the floor, `y` up, `+z`
//! toward the display center, `+x` to the right. The surface is
//! parameterized by azimuth (0 at the display center, positive toward `+x`)
//! and height above the floor.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::Vec3;
use crate::scalar::Scalar;

/// World-frame position in meters.
pub type WorldVector<T> = Vec3<T>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid display geometry: {0}")]
    InvalidGeometry(&'static str),
    #[error("surface point (azimuth {azimuth_rad} rad, height {height_m} m) lies outside the display")]
    OutOfBounds { azimuth_rad: f64, height_m: f64 },
    #[error("invalid user position: {0}")]
    InvalidPosition(&'static str),
    #[error("ray direction must be a finite non-zero vector")]
    DegenerateRay,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DisplayGeometry<T> {
    pub radius_m: T,
    pub height_m: T,
    pub half_angle_rad: T,
    pub floor_height_m: T,
}

impl<T: Scalar> Default for DisplayGeometry<T> {
    /// 3.27 m radius, 3 m tall, 180° extent.
    fn default() -> Self {
        Self {
            radius_m: T::lit(3.27),
            height_m: T::lit(3.0),
            half_angle_rad: T::FRAC_PI_2(),
            floor_height_m: T::zero(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SurfacePoint<T> {
    pub azimuth_rad: T,
    pub height_m: T,
}

impl<T: Scalar> SurfacePoint<T> {
    pub fn new(azimuth_rad: T, height_m: T) -> Self {
        Self { azimuth_rad, height_m }
    }
}

/// Where the user stands, relative to the display's main axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserPosition<T> {
    /// Interaction distance from the display center as a multiple of the radius.
    pub distance_multiple: T,
    /// Sideways displacement; negative is to the left.
    pub lateral_offset_m: T,
    pub controller_height_m: T,
}

impl<T: Scalar> UserPosition<T> {
    pub fn new(distance_multiple: T, lateral_offset_m: T) -> Self {
        Self { distance_multiple, lateral_offset_m, controller_height_m: T::one() }
    }

    /// Interaction distance in meters.
    pub fn interaction_distance_m(&self, geom: &DisplayGeometry<T>) -> T {
        self.distance_multiple * geom.radius_m
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray<T> {
    pub origin: WorldVector<T>,
    pub direction: WorldVector<T>,
}

impl<T: Scalar> Ray<T> {
    /// Builds a ray, normalizing `direction`.
    pub fn new(origin: WorldVector<T>, direction: WorldVector<T>) -> Result<Self, GeometryError> {
        let direction = direction.normalized().ok_or(GeometryError::DegenerateRay)?;
        if !origin.is_finite() {
            return Err(GeometryError::DegenerateRay);
        }
        Ok(Self { origin, direction })
    }
}

impl<T: Scalar> DisplayGeometry<T> {
    pub fn new(radius_m: T, height_m: T, half_angle_rad: T, floor_height_m: T) -> Result<Self, GeometryError> {
        let g = Self { radius_m, height_m, half_angle_rad, floor_height_m };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.radius_m > T::zero() && self.radius_m.is_finite()) {
            return Err(GeometryError::InvalidGeometry("radius must be positive"));
        }
        if !(self.height_m > T::zero() && self.height_m.is_finite()) {
            return Err(GeometryError::InvalidGeometry("height must be positive"));
        }
        if !(self.half_angle_rad > T::zero() && self.half_angle_rad <= T::PI()) {
            return Err(GeometryError::InvalidGeometry("half angle must lie in (0, π]"));
        }
        if !self.floor_height_m.is_finite() {
            return Err(GeometryError::InvalidGeometry("floor height must be finite"));
        }
        Ok(())
    }

    pub fn top_m(&self) -> T {
        self.floor_height_m + self.height_m
    }

    /// Width of the unrolled surface, `2·R·half_angle`.
    pub fn unrolled_width_m(&self) -> T {
        T::lit(2.0) * self.radius_m * self.half_angle_rad
    }

    pub fn contains(&self, p: SurfacePoint<T>) -> bool {
        let eps = T::boundary_eps();
        p.azimuth_rad.abs() <= self.half_angle_rad + eps
            && p.height_m >= self.floor_height_m - eps * self.height_m.max(T::one())
            && p.height_m <= self.top_m() + eps * self.top_m().abs().max(T::one())
    }

    fn check(&self, p: SurfacePoint<T>) -> Result<(), GeometryError> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(GeometryError::OutOfBounds { azimuth_rad: p.azimuth_rad.as_f64(), height_m: p.height_m.as_f64() })
        }
    }

    /// Snaps a point that is within rounding distance of the boundary onto it.
    fn clamp(&self, p: SurfacePoint<T>) -> SurfacePoint<T> {
        SurfacePoint {
            azimuth_rad: p.azimuth_rad.max(-self.half_angle_rad).min(self.half_angle_rad),
            height_m: p.height_m.max(self.floor_height_m).min(self.top_m()),
        }
    }

    pub fn user_world_position(&self, pos: &UserPosition<T>) -> WorldVector<T> {
        Vec3::new(
            pos.lateral_offset_m,
            pos.controller_height_m,
            (T::one() - pos.distance_multiple) * self.radius_m,
        )
    }

    /// Checks that the user stands inside the cylinder footprint, so every
    /// ray from the controller meets the surface at most once going forward.
    pub fn validate_position(&self, pos: &UserPosition<T>) -> Result<(), GeometryError> {
        if !(pos.distance_multiple > T::zero() && pos.distance_multiple.is_finite()) {
            return Err(GeometryError::InvalidPosition("distance multiple must be positive"));
        }
        let p = self.user_world_position(pos);
        if !p.is_finite() || (p.x * p.x + p.z * p.z).sqrt() >= self.radius_m {
            return Err(GeometryError::InvalidPosition("user must stand inside the display's curvature circle"));
        }
        Ok(())
    }

    pub fn surface_to_world(&self, p: SurfacePoint<T>) -> Result<WorldVector<T>, GeometryError> {
        self.check(p)?;
        Ok(self.surface_to_world_unchecked(p))
    }

    pub(crate) fn surface_to_world_unchecked(&self, p: SurfacePoint<T>) -> WorldVector<T> {
        let r = self.radius_m;
        Vec3::new(r * p.azimuth_rad.sin(), p.height_m, r * p.azimuth_rad.cos())
    }

    /// Nearest forward intersection of `ray` with the display, or `None` when
    /// the ray misses the cylinder, is vertical, or lands outside the display.
    pub fn intersect(&self, ray: &Ray<T>) -> Option<SurfacePoint<T>> {
        let o = ray.origin;
        let d = ray.direction;
        let a = d.x * d.x + d.z * d.z;
        if a <= T::epsilon() {
            return None;
        }
        let two = T::lit(2.0);
        let b = two * (o.x * d.x + o.z * d.z);
        let c = o.x * o.x + o.z * o.z - self.radius_m * self.radius_m;
        let disc = b * b - T::lit(4.0) * a * c;
        if disc < T::zero() {
            return None;
        }
        // Cancellation-free root pair.
        let q = -(b + b.signum() * disc.sqrt()) / two;
        let mut roots = [q / a, if q != T::zero() { c / q } else { -b / (two * a) }];
        if roots[0] > roots[1] {
            roots.swap(0, 1);
        }
        let t = roots.into_iter().find(|&t| t > T::zero())?;
        let hit = o + d.scale(t);
        let p = SurfacePoint::new(hit.x.atan2(hit.z), hit.y);
        if self.contains(p) {
            Some(self.clamp(p))
        } else {
            None
        }
    }

    /// Position on the unrolled (developed) surface: `(R·azimuth, height)`.
    pub fn unroll(&self, p: SurfacePoint<T>) -> (T, T) {
        (self.radius_m * p.azimuth_rad, p.height_m)
    }

    pub fn roll_up(&self, u: T, h: T) -> SurfacePoint<T> {
        SurfacePoint::new(u / self.radius_m, h)
    }

    /// Euclidean distance on the unrolled surface, exact for a cylinder.
    pub fn geodesic_distance(&self, a: SurfacePoint<T>, b: SurfacePoint<T>) -> T {
        let du = self.radius_m * (a.azimuth_rad - b.azimuth_rad);
        let dh = a.height_m - b.height_m;
        du.hypot(dh)
    }

    /// Direction from the controller origin to a surface point as yaw/pitch.
    pub fn aim_yaw_pitch(&self, origin: WorldVector<T>, p: SurfacePoint<T>) -> (T, T) {
        let v = self.surface_to_world_unchecked(p) - origin;
        let horiz = (v.x * v.x + v.z * v.z).sqrt();
        (v.x.atan2(v.z), v.y.atan2(horiz))
    }
}
