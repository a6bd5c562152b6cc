//! Scalar abstraction so the numeric core runs in either precision.
//!
//! Training defaults to `f32`; gradient verification runs in `f64`, where
//! central finite differences are trustworthy.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::distributions::uniform::SampleUniform;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar usable everywhere in the numeric core.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + num_traits::NumAssignOps
    + Sum<Self>
    + SampleUniform
    + Serialize
    + DeserializeOwned
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossless-enough conversion from an `f64` literal; panics only on NaN
    /// literals, which never appear in this crate.
    fn from_f64_lit(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("finite literal")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Clamp to the unit interval, the valid range of a blendshape weight.
pub fn clamp01<T: Scalar>(x: T) -> T {
    x.max(T::zero()).min(T::one())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamp01_bounds() {
        assert_eq!(clamp01(-0.5f64), 0.0);
        assert_eq!(clamp01(0.5f64), 0.5);
        assert_eq!(clamp01(1.5f64), 1.0);
    }

    #[test]
    fn literal_roundtrip() {
        assert_eq!(f64::from_f64_lit(0.25), 0.25);
        assert_eq!(f32::from_f64_lit(0.25), 0.25f32);
    }
}
