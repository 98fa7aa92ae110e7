//! Scalar abstraction shared by the geometry, transfer and analysis code.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar usable by the generic math: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Panics only for values unrepresentable as `Self`,
    /// which never happens for the finite constants used in this crate.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    /// Lossy conversion to `f64` for reporting.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Tolerance used for boundary membership tests, scaled to the type's precision.
    #[inline]
    fn boundary_eps() -> Self {
        Self::epsilon() * Self::lit(64.0)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle<T: Scalar>(a: T) -> T {
    let two_pi = T::TAU();
    let mut w = a % two_pi;
    if w > T::PI() {
        w = w - two_pi;
    } else if w <= -T::PI() {
        w = w + two_pi;
    }
    w
}
