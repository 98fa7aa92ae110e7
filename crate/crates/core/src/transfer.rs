//! Control-display gain and cursor-size transfer functions.
//!
//! Every technique is built from one logistic curve,
//!
//! ```text
//! f(x) = (out_max - out_min) / (1 + exp(-λ (x - v_inf))) + out_min
//! v_inf = r_inf · (v_max - v_min) + v_min
//! ```
//!
//! driven either by controller speed or by interaction distance. The
//! distance-adjusted family shifts both bounds down linearly in the scaled
//! interaction distance `d_s ∈ [0, 1]`:
//! `(cd_max, cd_min) = (cd_max_bar - a·d_s, cd_min_bar - a·d_s)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::DisplayGeometry;
use crate::scalar::Scalar;

/// Diameter of the unenhanced cursor, meters.
pub const BASE_CURSOR_DIAMETER_M: f64 = 0.025;
/// Largest diameter an enlarging cursor reaches, meters.
pub const MAX_CURSOR_DIAMETER_M: f64 = 0.20;

const EXPONENT_LIMIT: f64 = 700.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransferError {
    #[error("invalid sigmoid parameters: {0}")]
    InvalidSigmoid(&'static str),
    #[error("invalid distance adjustment: {0}")]
    InvalidAdjust(&'static str),
    #[error("unknown technique {0:?}")]
    UnknownTechnique(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmoidParams<T> {
    pub out_max: T,
    pub out_min: T,
    /// Slope at the inflection point. Negative values give a decreasing curve.
    pub lambda: T,
    pub v_max: T,
    pub v_min: T,
    pub r_inf: T,
}

impl<T: Scalar> SigmoidParams<T> {
    /// Speed-driven gain curve between 1.2 and 0.8.
    pub fn speed_gain() -> Self {
        Self::speed_driven(T::lit(1.2), T::lit(0.8))
    }

    /// Speed-driven cursor diameter between 20 cm and 2.5 cm.
    pub fn speed_size() -> Self {
        Self::speed_driven(T::lit(MAX_CURSOR_DIAMETER_M), T::lit(BASE_CURSOR_DIAMETER_M))
    }

    fn speed_driven(out_max: T, out_min: T) -> Self {
        Self { out_max, out_min, lambda: T::lit(20.0), v_max: T::one(), v_min: T::lit(0.1), r_inf: T::lit(0.5) }
    }

    /// Distance-driven gain, 4.5 near the display falling to 0.7 far away,
    /// centered on the curvature radius.
    pub fn distance_gain(geom: &DisplayGeometry<T>) -> Self {
        let r = geom.radius_m;
        Self {
            out_max: T::lit(4.5),
            out_min: T::lit(0.7),
            lambda: -T::lit(20.0) / r,
            v_max: T::lit(1.5) * r,
            v_min: T::lit(0.5) * r,
            r_inf: T::lit(0.5),
        }
    }

    pub fn validate(&self) -> Result<(), TransferError> {
        let all_finite = [self.out_max, self.out_min, self.lambda, self.v_max, self.v_min, self.r_inf]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(TransferError::InvalidSigmoid("parameters must be finite"));
        }
        if self.v_max <= self.v_min {
            return Err(TransferError::InvalidSigmoid("v_max must exceed v_min"));
        }
        if self.r_inf < T::zero() || self.r_inf > T::one() {
            return Err(TransferError::InvalidSigmoid("r_inf must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Inflection point `v_inf`.
    pub fn inflection(&self) -> T {
        self.r_inf * (self.v_max - self.v_min) + self.v_min
    }

    /// Evaluates the logistic curve at `x`.
    pub fn map(&self, x: T) -> T {
        let limit = T::lit(EXPONENT_LIMIT);
        let e = (-self.lambda * (x - self.inflection())).max(-limit).min(limit);
        (self.out_max - self.out_min) / (T::one() + e.exp()) + self.out_min
    }

    /// Same curve with different output bounds.
    pub fn with_bounds(&self, out_max: T, out_min: T) -> Self {
        Self { out_max, out_min, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceAdjust<T> {
    pub a: T,
    pub cd_max_bar: T,
    pub cd_min_bar: T,
}

impl<T: Scalar> Default for DistanceAdjust<T> {
    fn default() -> Self {
        Self { a: T::lit(0.2), cd_max_bar: T::lit(1.2), cd_min_bar: T::lit(0.8) }
    }
}

impl<T: Scalar> DistanceAdjust<T> {
    pub fn validate(&self) -> Result<(), TransferError> {
        if self.cd_max_bar <= self.cd_min_bar {
            return Err(TransferError::InvalidAdjust("cd_max_bar must exceed cd_min_bar"));
        }
        // Both bounds stay positive over d_s ∈ [0, 1].
        if self.cd_min_bar - self.a.max(T::zero()) <= T::zero() || self.cd_min_bar <= T::zero() {
            return Err(TransferError::InvalidAdjust("gain bounds must stay positive for d_s in [0, 1]"));
        }
        Ok(())
    }

    /// Gain bounds `(cd_max, cd_min)` at scaled distance `d_s`.
    pub fn bounds(&self, d_s: T) -> (T, T) {
        (self.cd_max_bar - self.a * d_s, self.cd_min_bar - self.a * d_s)
    }
}

/// Maps an interaction distance in meters onto `[0, 1]`: 0 at half the
/// radius, 0.5 at the radius, 1 at one and a half radii.
pub fn scaled_distance<T: Scalar>(distance_m: T, geom: &DisplayGeometry<T>) -> T {
    (distance_m / geom.radius_m - T::lit(0.5)).max(T::zero()).min(T::one())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TechniqueId {
    #[serde(rename = "ABSOLUTE")]
    Absolute,
    #[serde(rename = "PA")]
    Pa,
    #[serde(rename = "PASIZE")]
    PaSize,
    #[serde(rename = "PBA")]
    Pba,
    #[serde(rename = "PBASIZE")]
    PbaSize,
    #[serde(rename = "PADIST")]
    PaDist,
    #[serde(rename = "PADISTSIZE")]
    PaDistSize,
}

impl TechniqueId {
    pub const ALL: [TechniqueId; 7] = [
        TechniqueId::Absolute,
        TechniqueId::Pa,
        TechniqueId::PaSize,
        TechniqueId::Pba,
        TechniqueId::PbaSize,
        TechniqueId::PaDist,
        TechniqueId::PaDistSize,
    ];

    /// The six cursor-enhancement techniques, in table order.
    pub const ENHANCED: [TechniqueId; 6] = [
        TechniqueId::Pa,
        TechniqueId::PaSize,
        TechniqueId::Pba,
        TechniqueId::PbaSize,
        TechniqueId::PaDist,
        TechniqueId::PaDistSize,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TechniqueId::Absolute => "ABSOLUTE",
            TechniqueId::Pa => "PA",
            TechniqueId::PaSize => "PASIZE",
            TechniqueId::Pba => "PBA",
            TechniqueId::PbaSize => "PBASIZE",
            TechniqueId::PaDist => "PADIST",
            TechniqueId::PaDistSize => "PADISTSIZE",
        }
    }

    pub fn enlarges_cursor(self) -> bool {
        matches!(self, TechniqueId::PaSize | TechniqueId::PbaSize | TechniqueId::PaDistSize)
    }

    /// The technique with the same gain behaviour and a fixed-size cursor.
    pub fn motor_base(self) -> TechniqueId {
        match self {
            TechniqueId::PaSize => TechniqueId::Pa,
            TechniqueId::PbaSize => TechniqueId::Pba,
            TechniqueId::PaDistSize => TechniqueId::PaDist,
            other => other,
        }
    }

    pub fn is_relative(self) -> bool {
        self != TechniqueId::Absolute
    }
}

impl fmt::Display for TechniqueId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TechniqueId {
    type Err = TransferError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let up = s.trim().to_ascii_uppercase();
        TechniqueId::ALL
            .into_iter()
            .find(|t| t.name() == up)
            .ok_or_else(|| TransferError::UnknownTechnique(s.to_string()))
    }
}

/// Tunable curves shared by all techniques. `distance_gain` defaults to a
/// curve derived from the display radius when absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransferParams<T> {
    pub speed_gain: SigmoidParams<T>,
    pub distance_gain: Option<SigmoidParams<T>>,
    pub distance_adjust: DistanceAdjust<T>,
    pub size: SigmoidParams<T>,
}

impl<T: Scalar> Default for TransferParams<T> {
    fn default() -> Self {
        Self {
            speed_gain: SigmoidParams::speed_gain(),
            distance_gain: None,
            distance_adjust: DistanceAdjust::default(),
            size: SigmoidParams::speed_size(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TechniqueConfig<T> {
    pub id: TechniqueId,
    pub gain_sigmoid: SigmoidParams<T>,
    pub distance_sigmoid: SigmoidParams<T>,
    pub distance_adjust: DistanceAdjust<T>,
    pub size_sigmoid: Option<SigmoidParams<T>>,
}

impl<T: Scalar> TechniqueConfig<T> {
    /// Technique with the published default constants.
    pub fn preset(id: TechniqueId, geom: &DisplayGeometry<T>) -> Self {
        Self::from_params(id, &TransferParams::default(), geom).expect("default parameters are valid")
    }

    pub fn from_params(
        id: TechniqueId,
        params: &TransferParams<T>,
        geom: &DisplayGeometry<T>,
    ) -> Result<Self, TransferError> {
        let distance_sigmoid = params.distance_gain.unwrap_or_else(|| SigmoidParams::distance_gain(geom));
        params.speed_gain.validate()?;
        distance_sigmoid.validate()?;
        params.distance_adjust.validate()?;
        params.size.validate()?;
        Ok(Self {
            id,
            gain_sigmoid: params.speed_gain,
            distance_sigmoid,
            distance_adjust: params.distance_adjust,
            size_sigmoid: id.enlarges_cursor().then_some(params.size),
        })
    }

    /// Dimensionless multiplier applied to controller rotation.
    pub fn gain(&self, controller_speed_mps: T, interaction_distance_m: T, geom: &DisplayGeometry<T>) -> T {
        match self.id {
            TechniqueId::Absolute => T::one(),
            TechniqueId::Pa | TechniqueId::PaSize => self.gain_sigmoid.map(controller_speed_mps),
            TechniqueId::Pba | TechniqueId::PbaSize => self.distance_sigmoid.map(interaction_distance_m),
            TechniqueId::PaDist | TechniqueId::PaDistSize => {
                let d_s = scaled_distance(interaction_distance_m, geom);
                let (hi, lo) = self.distance_adjust.bounds(d_s);
                self.gain_sigmoid.with_bounds(hi, lo).map(controller_speed_mps)
            }
        }
    }

    pub fn cursor_diameter(&self, controller_speed_mps: T) -> T {
        match &self.size_sigmoid {
            Some(s) => s.map(controller_speed_mps),
            None => T::lit(BASE_CURSOR_DIAMETER_M),
        }
    }
}
