//! Fitts task layouts on the unrolled display surface and selection rules.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{DisplayGeometry, SurfacePoint};
use crate::scalar::Scalar;

/// Diameter of the start circle, meters.
pub const START_DIAMETER_M: f64 = 0.20;

const MAX_DIRECTION_DRAWS: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TaskError {
    #[error("invalid task: {0}")]
    Invalid(&'static str),
    #[error("task A = {amplitude_m} m, W = {width_m} m does not fit the display (max amplitude {max_amplitude_m:.3} m)")]
    Infeasible { amplitude_m: f64, width_m: f64, max_amplitude_m: f64 },
    #[error("unknown selection mode {0:?}")]
    UnknownMode(String),
}

/// Shannon index of difficulty, bits.
pub fn fitts_id<T: Scalar>(amplitude_m: T, width_m: T) -> T {
    (amplitude_m / width_m + T::one()).log2()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec<T> {
    pub amplitude_m: T,
    pub width_m: T,
}

impl<T: Scalar> TaskSpec<T> {
    pub fn new(amplitude_m: T, width_m: T) -> Self {
        Self { amplitude_m, width_m }
    }

    pub fn id_bits(&self) -> T {
        fitts_id(self.amplitude_m, self.width_m)
    }

    /// Checks that start and target discs can be placed `amplitude` apart.
    pub fn check_feasible(&self, geom: &DisplayGeometry<T>) -> Result<(), TaskError> {
        if !(self.width_m > T::zero()) || !self.width_m.is_finite() {
            return Err(TaskError::Invalid("width must be positive"));
        }
        if !(self.amplitude_m >= T::zero()) || !self.amplitude_m.is_finite() {
            return Err(TaskError::Invalid("amplitude must be non-negative"));
        }
        let infeasible = |max: T| TaskError::Infeasible {
            amplitude_m: self.amplitude_m.as_f64(),
            width_m: self.width_m.as_f64(),
            max_amplitude_m: max.as_f64(),
        };
        let (Some(s), Some(t)) = (Rect::inset(geom, start_radius()), Rect::inset(geom, self.width_m / T::lit(2.0)))
        else {
            return Err(infeasible(T::zero()));
        };
        let max = s.max_distance(&t);
        let min = if self.amplitude_m == T::zero() { s.intersect(&t).map(|_| T::zero()) } else { Some(T::zero()) };
        if self.amplitude_m > max || min.is_none() {
            return Err(infeasible(max));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialLayout<T> {
    pub start: SurfacePoint<T>,
    pub target: SurfacePoint<T>,
    pub spec: TaskSpec<T>,
}

/// How the cursor disc and the target disc must relate for a hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMode {
    /// Cursor disc touches the target disc (area cursor).
    #[default]
    Overlap,
    /// Cursor center inside the target disc.
    Center,
}

impl fmt::Display for SelectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SelectionMode::Overlap => "overlap",
            SelectionMode::Center => "center",
        })
    }
}

impl FromStr for SelectionMode {
    type Err = TaskError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "overlap" => Ok(SelectionMode::Overlap),
            "center" => Ok(SelectionMode::Center),
            _ => Err(TaskError::UnknownMode(s.to_string())),
        }
    }
}

impl SelectionMode {
    /// Largest cursor-to-target center distance that still counts as a hit.
    pub fn threshold<T: Scalar>(self, width_m: T, cursor_diameter_m: T) -> T {
        match self {
            SelectionMode::Overlap => (width_m + cursor_diameter_m) / T::lit(2.0),
            SelectionMode::Center => width_m / T::lit(2.0),
        }
    }
}

pub fn hit_test<T: Scalar>(
    cursor: SurfacePoint<T>,
    cursor_diameter_m: T,
    layout: &TrialLayout<T>,
    mode: SelectionMode,
    geom: &DisplayGeometry<T>,
) -> bool {
    geom.geodesic_distance(cursor, layout.target) <= mode.threshold(layout.spec.width_m, cursor_diameter_m)
}

fn start_radius<T: Scalar>() -> T {
    T::lit(START_DIAMETER_M / 2.0)
}

/// Axis-aligned rectangle on the unrolled surface `(u = R·azimuth, h)`.
#[derive(Debug, Clone, Copy)]
struct Rect<T> {
    u0: T,
    u1: T,
    h0: T,
    h1: T,
}

impl<T: Scalar> Rect<T> {
    /// Centers at which a disc of `radius` fits on the display.
    fn inset(geom: &DisplayGeometry<T>, radius: T) -> Option<Self> {
        let half = geom.radius_m * geom.half_angle_rad;
        let r = Self {
            u0: -half + radius,
            u1: half - radius,
            h0: geom.floor_height_m + radius,
            h1: geom.top_m() - radius,
        };
        (r.u0 <= r.u1 && r.h0 <= r.h1).then_some(r)
    }

    fn contains(&self, u: T, h: T) -> bool {
        u >= self.u0 && u <= self.u1 && h >= self.h0 && h <= self.h1
    }

    fn intersect(&self, o: &Self) -> Option<Self> {
        let r = Self { u0: self.u0.max(o.u0), u1: self.u1.min(o.u1), h0: self.h0.max(o.h0), h1: self.h1.min(o.h1) };
        (r.u0 <= r.u1 && r.h0 <= r.h1).then_some(r)
    }

    fn max_distance(&self, o: &Self) -> T {
        let du = (self.u1 - o.u0).max(o.u1 - self.u0);
        let dh = (self.h1 - o.h0).max(o.h1 - self.h0);
        du.hypot(dh)
    }

    fn max_distance_from(&self, u: T, h: T) -> T {
        let du = (u - self.u0).abs().max((self.u1 - u).abs());
        let dh = (h - self.h0).abs().max((self.h1 - h).abs());
        du.hypot(dh)
    }

    fn min_distance_from(&self, u: T, h: T) -> T {
        let du = (self.u0 - u).max(u - self.u1).max(T::zero());
        let dh = (self.h0 - h).max(h - self.h1).max(T::zero());
        du.hypot(dh)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (T, T) {
        let a = T::lit(rng.random::<f64>());
        let b = T::lit(rng.random::<f64>());
        (self.u0 + (self.u1 - self.u0) * a, self.h0 + (self.h1 - self.h0) * b)
    }
}

/// Draws a start circle and a target `amplitude` away on the unrolled surface.
pub fn generate_layout<T: Scalar, R: Rng + ?Sized>(
    rng: &mut R,
    spec: TaskSpec<T>,
    geom: &DisplayGeometry<T>,
) -> Result<TrialLayout<T>, TaskError> {
    spec.check_feasible(geom)?;
    let starts = Rect::inset(geom, start_radius()).expect("checked");
    let targets = Rect::inset(geom, spec.width_m / T::lit(2.0)).expect("checked");
    let a = spec.amplitude_m;

    if a == T::zero() {
        let both = starts.intersect(&targets).expect("checked");
        let (u, h) = both.sample(rng);
        let p = geom.roll_up(u, h);
        return Ok(TrialLayout { start: p, target: p, spec });
    }

    loop {
        let (su, sh) = starts.sample(rng);
        if targets.min_distance_from(su, sh) > a || targets.max_distance_from(su, sh) < a {
            continue;
        }
        for _ in 0..MAX_DIRECTION_DRAWS {
            let theta = T::lit(rng.random::<f64>()) * T::TAU();
            let (tu, th) = (su + a * theta.cos(), sh + a * theta.sin());
            if targets.contains(tu, th) {
                return Ok(TrialLayout { start: geom.roll_up(su, sh), target: geom.roll_up(tu, th), spec });
            }
        }
        // Only reachable when the feasible arc is vanishingly thin; redraw the start.
    }
}

/// Fixed task grids used by the two experiment presets.
pub mod presets {
    use super::TaskSpec;
    use crate::scalar::Scalar;

    /// Amplitudes 2.5, 5, 7.5 m crossed with widths 0.20, 0.70 m.
    pub fn study1<T: Scalar>() -> Vec<TaskSpec<T>> {
        grid(&[2.5, 5.0, 7.5], &[0.20, 0.70])
    }

    /// Amplitudes 2.5, 7.5 m with a 0.10 m target.
    pub fn study2<T: Scalar>() -> Vec<TaskSpec<T>> {
        grid(&[2.5, 7.5], &[0.10])
    }

    fn grid<T: Scalar>(amplitudes: &[f64], widths: &[f64]) -> Vec<TaskSpec<T>> {
        widths
            .iter()
            .flat_map(|&w| amplitudes.iter().map(move |&a| TaskSpec::new(T::lit(a), T::lit(w))))
            .collect()
    }
}
