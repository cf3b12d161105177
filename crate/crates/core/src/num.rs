//! Scalar abstraction shared by every numeric kernel.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::num::ParseFloatError;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rustdct::DctNum;

/// Floating point type the placer can run on (`f32` or `f64`).
///
/// The wirelength kernels, the density model and the optimizer are written
/// against this trait so the same code serves single and double precision.
/// Tolerances quoted throughout the test-suite assume `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + DctNum
    + Default
    + Debug
    + Display
    + Sum
    + FromStr<Err = ParseFloatError>
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn of(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 literal representable")
    }

    /// Conversion from a count.
    #[inline]
    fn of_usize(v: usize) -> Self {
        <Self as FromPrimitive>::from_usize(v).expect("count representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_conversion() {
        assert_eq!(f64::of(0.25), 0.25);
        assert_eq!(f32::of(0.25), 0.25f32);
        assert_eq!(f64::of_usize(7), 7.0);
        assert_eq!(2.5f32.to_f64_lossy(), 2.5);
    }
}
