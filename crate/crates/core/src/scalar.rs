//! Scalar abstraction for the numeric kernels.
//!
//! Kernels that are pure real arithmetic (transfer matrices, band scans, the
//! least-squares solver, budget formulas) are generic over [`Real`] so they can
//! be instantiated at `f32` or `f64`. The eigensolver-backed and serialized
//! layers work in `f64`; see the [`Scalar`](crate::Scalar) alias at the crate
//! root.

use std::fmt;
use std::iter::Sum;

/// Floating-point scalar usable by the generic kernels: `f32` or `f64`.
pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::NumAssign
    + Sum
    + fmt::Debug
    + fmt::Display
    + fmt::LowerExp
    + Send
    + Sync
    + 'static
{
    /// Lift an `f64` literal into the scalar type.
    fn lit(x: f64) -> Self {
        <Self as num_traits::FromPrimitive>::from_f64(x).expect("literal out of range")
    }

    fn from_usize_(n: usize) -> Self {
        <Self as num_traits::FromPrimitive>::from_usize(n).expect("usize out of range")
    }

    fn pi() -> Self {
        Self::lit(std::f64::consts::PI)
    }

    fn two_pi() -> Self {
        Self::lit(std::f64::consts::TAU)
    }
}

impl Real for f32 {}
impl Real for f64 {}
