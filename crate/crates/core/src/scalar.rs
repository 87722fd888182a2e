//! Scalar abstraction for the numeric core.
//!
//! All math in this crate is generic over [`Scalar`], implemented for `f32`
//! and `f64`. The crate-root aliases (`Matrix64`, `AdmoeModel64`, ...) pin the
//! default 64-bit instantiation used by the training harness and tests; the
//! tight gradient-check tolerances assume that instantiation.

use num_traits::{Float, FromPrimitive, NumAssignOps};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalar usable throughout the numeric core.
///
/// `Float` brings comparison, transcendental functions, and `NumCast`, so
/// constants are written `T::from(0.5).unwrap()`.
pub trait Scalar:
    Float + FromPrimitive + NumAssignOps + Sum<Self> + Debug + Display + Send + Sync + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Lossy f64 -> T conversion for constants and RNG draws.
#[inline]
pub fn cast<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("finite f64 converts to any Scalar")
}

/// T -> f64 for reporting and serialization (exact for f32/f64).
#[inline]
pub fn to_f64<T: Scalar>(x: T) -> f64 {
    x.to_f64().expect("Scalar converts to f64")
}
