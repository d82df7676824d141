//! Scalar bound shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + for<'a> Sum<&'a Self>
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossless widening for `f32`, identity for `f64`.
    fn to_f64_lossless(self) -> f64 {
        self.to_f64().expect("float to f64")
    }

    /// Nearest representable value; used for literals and config values.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 to float")
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count to float")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
