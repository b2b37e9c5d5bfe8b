//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_rational::Ratio;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Conversion from an integer count or index.
    fn from_usize_lossy(k: usize) -> Self {
        Self::from_usize(k).expect("usize representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Evaluate an exact rational constant in this scalar type.
    fn from_ratio(r: Ratio<i64>) -> Self {
        Self::lit(*r.numer() as f64) / Self::lit(*r.denom() as f64)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Relative difference `|a - b| / max(|a|, |b|, tiny)`.
pub fn rel_diff<T: Real>(a: T, b: T) -> T {
    let scale = a.abs().max(b.abs()).max(T::min_positive_value());
    (a - b).abs() / scale
}
