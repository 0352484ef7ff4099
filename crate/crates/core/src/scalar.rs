//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! All math is written against [`Real`], which is satisfied by `f32` and
//! `f64`. Tables that are expensive to derive (Clebsch-Gordan blocks) are
//! computed once in `f64` and cast on demand.

use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point type usable by the equivariant pipeline.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Default + Debug + Display + Send + Sync + 'static
{
    /// Tolerance used when validating that a matrix is a rotation.
    fn rotation_tolerance() -> Self;
}

impl Real for f64 {
    fn rotation_tolerance() -> Self {
        1e-9
    }
}

impl Real for f32 {
    fn rotation_tolerance() -> Self {
        2e-5
    }
}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

/// Converts a count into `T`.
#[inline]
pub fn from_usize<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("count representable in scalar type")
}

/// Widens a scalar to `f64` for reporting and serialization.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    ToPrimitive::to_f64(&x).expect("scalar convertible to f64")
}
