//! Real scalar abstraction for the numeric modules.

use num_traits::FromPrimitive;

/// Floating-point scalar the simulation is generic over: `f32` or `f64`.
pub trait Real:
    nalgebra::RealField + Copy + FromPrimitive + Default + std::fmt::LowerExp
{
    /// Lossy conversion from an `f64` literal.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    /// `usize` count as a scalar.
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count fits scalar")
    }
}

impl Real for f32 {}
impl Real for f64 {}
