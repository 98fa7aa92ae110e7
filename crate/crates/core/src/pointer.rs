//! Cursor state and its per-tick update rules.
//!
//! Relative techniques keep a virtual ray whose orientation is rotated by the
//! controller's frame-to-frame rotation, with the rotation angle multiplied
//! by the current gain. A candidate orientation is accepted only when its
//! yaw and pitch stay within the display limits and its ray still lands on
//! the display; otherwise the previous orientation is kept.

use thiserror::Error;

use crate::geometry::{DisplayGeometry, Ray, SurfacePoint, UserPosition, WorldVector};
use crate::math::Rotation;
use crate::scalar::Scalar;
use crate::transfer::TechniqueConfig;

/// Simulation tick rate, Hz.
pub const DEFAULT_TICK_RATE_HZ: f64 = 90.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PointerError {
    #[error("controller samples must advance in time (dt = {0} s)")]
    NonIncreasingTime(f64),
    #[error("controller ray does not hit the display")]
    OffDisplay,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerSample<T> {
    pub position: WorldVector<T>,
    pub orientation: Rotation<T>,
    pub time_s: T,
}

impl<T: Scalar> ControllerSample<T> {
    pub fn new(position: WorldVector<T>, orientation: Rotation<T>, time_s: T) -> Self {
        Self { position, orientation: orientation.normalized(), time_s }
    }

    pub fn ray(&self) -> Ray<T> {
        Ray { origin: self.position, direction: self.orientation.forward() }
    }
}

/// Frame the orientation window is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LimitFrame {
    /// Direction of the cursor seen from the curvature axis at the ray
    /// origin's height: yaw is the cursor azimuth, pitch its elevation.
    #[default]
    Display,
    /// Yaw and pitch of the virtual ray itself.
    Ray,
}

/// Yaw/pitch window the virtual ray may occupy, radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientationLimits<T> {
    pub yaw_max: T,
    pub pitch_max: T,
    pub frame: LimitFrame,
}

impl<T: Scalar> Default for OrientationLimits<T> {
    /// ±90° yaw, ±70° pitch.
    fn default() -> Self {
        Self { yaw_max: T::FRAC_PI_2(), pitch_max: T::lit(70.0).to_radians(), frame: LimitFrame::Display }
    }
}

impl<T: Scalar> OrientationLimits<T> {
    pub fn admits(&self, yaw: T, pitch: T) -> bool {
        yaw.abs() <= self.yaw_max && pitch.abs() <= self.pitch_max
    }

    fn admits_candidate(&self, orientation: Rotation<T>, origin: WorldVector<T>, hit: SurfacePoint<T>, geom: &DisplayGeometry<T>) -> bool {
        match self.frame {
            LimitFrame::Ray => {
                let (yaw, pitch) = orientation.yaw_pitch();
                self.admits(yaw, pitch)
            }
            LimitFrame::Display => self.admits(hit.azimuth_rad, (hit.height_m - origin.y).atan2(geom.radius_m)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CursorState<T> {
    pub virtual_orientation: Rotation<T>,
    pub origin: WorldVector<T>,
    pub surface: SurfacePoint<T>,
    pub diameter_m: T,
    pub last_controller: ControllerSample<T>,
    /// False after an absolute update whose ray missed the display.
    pub on_display: bool,
}

/// Result of one pipeline tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutput<T> {
    pub state: CursorState<T>,
    pub gain: T,
    pub controller_speed_mps: T,
}

/// Positional controller speed between two samples, m/s.
pub fn controller_speed<T: Scalar>(prev: &ControllerSample<T>, next: &ControllerSample<T>) -> Result<T, PointerError> {
    let dt = next.time_s - prev.time_s;
    if !(dt > T::zero()) {
        return Err(PointerError::NonIncreasingTime(dt.as_f64()));
    }
    Ok((next.position - prev.position).norm() / dt)
}

impl<T: Scalar> CursorState<T> {
    /// Starts with the virtual ray aligned to the controller.
    pub fn aligned(sample: ControllerSample<T>, geom: &DisplayGeometry<T>) -> Result<Self, PointerError> {
        let surface = geom.intersect(&sample.ray()).ok_or(PointerError::OffDisplay)?;
        Ok(Self {
            virtual_orientation: sample.orientation,
            origin: sample.position,
            surface,
            diameter_m: T::lit(crate::transfer::BASE_CURSOR_DIAMETER_M),
            last_controller: sample,
            on_display: true,
        })
    }

    /// Plain ray casting: the cursor sits where the controller points. A miss
    /// keeps the previous surface point and clears `on_display`.
    pub fn absolute_update(&self, sample: ControllerSample<T>, geom: &DisplayGeometry<T>) -> Self {
        let mut next = *self;
        next.virtual_orientation = sample.orientation;
        next.origin = sample.position;
        next.last_controller = sample;
        match geom.intersect(&sample.ray()) {
            Some(p) => {
                next.surface = p;
                next.on_display = true;
            }
            None => next.on_display = false,
        }
        next
    }

    /// Rotates the virtual ray by the controller's rotation since the last
    /// sample, scaled by `gain`.
    pub fn relative_update(&self, next: ControllerSample<T>, gain: T, geom: &DisplayGeometry<T>) -> Self {
        self.relative_update_within(next, gain, geom, &OrientationLimits::default())
    }

    pub fn relative_update_within(
        &self,
        next: ControllerSample<T>,
        gain: T,
        geom: &DisplayGeometry<T>,
        limits: &OrientationLimits<T>,
    ) -> Self {
        let delta = next.orientation * self.last_controller.orientation.inverse();
        let (angle, axis) = delta.to_angle_axis();
        // The world-frame delta applied on the left equals the local-frame
        // axis applied on the right of the virtual orientation.
        let candidate = (Rotation::from_angle_axis(angle * gain, axis) * self.virtual_orientation).normalized();
        let mut out = *self;
        out.last_controller = next;
        out.origin = next.position;
        let hit = geom
            .intersect(&Ray { origin: next.position, direction: candidate.forward() })
            .filter(|&p| limits.admits_candidate(candidate, next.position, p, geom));
        match hit {
            Some(p) => {
                out.virtual_orientation = candidate;
                out.surface = p;
            }
            None => {
                // Rejected: the orientation stays, the cursor follows the moved origin if it can.
                let ray = Ray { origin: next.position, direction: self.virtual_orientation.forward() };
                if let Some(p) = geom.intersect(&ray) {
                    out.surface = p;
                }
            }
        }
        out.on_display = true;
        out
    }

    /// Full per-tick pipeline: speed, gain, orientation update, cursor size.
    pub fn step(
        &self,
        next: ControllerSample<T>,
        cfg: &TechniqueConfig<T>,
        pos: &UserPosition<T>,
        geom: &DisplayGeometry<T>,
    ) -> Result<StepOutput<T>, PointerError> {
        let speed = controller_speed(&self.last_controller, &next)?;
        let gain = cfg.gain(speed, pos.interaction_distance_m(geom), geom);
        let mut state = if cfg.id.is_relative() {
            self.relative_update(next, gain, geom)
        } else {
            self.absolute_update(next, geom)
        };
        state.diameter_m = cfg.cursor_diameter(speed);
        Ok(StepOutput { state, gain, controller_speed_mps: speed })
    }
}
