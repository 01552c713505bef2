//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar used throughout the crate (`f32` or `f64`).
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    /// Widens to `f64`.
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Magnitude below which a negative posterior variance is treated as rounding noise.
    #[inline]
    fn variance_clamp_tol(scale: Self) -> Self {
        let floor = Self::lit(1e-12);
        let rel = Self::lit(100.0) * Self::epsilon() * scale.abs();
        if rel > floor {
            rel
        } else {
            floor
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}
