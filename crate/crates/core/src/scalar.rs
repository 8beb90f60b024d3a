//! Scalar abstraction shared by the geometry, thermodynamics and grid code.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point scalar usable by the numerical kernels (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Relative tolerance reachable by iterative solvers in this precision.
    #[inline]
    fn solver_tol() -> Self {
        Self::lit(1e-12).max(Self::epsilon() * Self::lit(16.0))
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Spatial point; the second coordinate is unused (zero) in 1D.
pub type Point<T> = [T; 2];
