//! Floating-point abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar the integrators and maps are generic over: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn two_pi() -> Self {
        Self::TAU()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Reduces an angle into `[0, 2π)`.
#[inline]
pub fn wrap_angle<T: Scalar>(x: T) -> T {
    let tau = T::two_pi();
    let mut r = x % tau;
    if r < T::zero() {
        r = r + tau;
    }
    // `r + tau` can round up to exactly tau for tiny negative inputs
    if r >= tau {
        r = T::zero();
    }
    r
}

/// Smallest signed representative of an angle difference, in `[-π, π)`.
#[inline]
pub fn wrap_delta<T: Scalar>(d: T) -> T {
    let pi = T::PI();
    wrap_angle(d + pi) - pi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_angle_range() {
        for &x in &[-7.0f64, -1e-300, 0.0, 1.0, 6.283185307179586, 13.0] {
            let w = wrap_angle(x);
            assert!((0.0..std::f64::consts::TAU).contains(&w), "{x} -> {w}");
        }
        assert_eq!(wrap_angle(-1e-300f64), 0.0);
    }

    #[test]
    fn wrap_delta_symmetric() {
        assert!((wrap_delta(6.2f64) - (6.2 - std::f64::consts::TAU)).abs() < 1e-15);
        assert!((wrap_delta(-0.1f32) + 0.1).abs() < 1e-6);
    }
}
