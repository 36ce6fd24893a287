//! Scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Real floating-point field the simulator is generic over (`f32`, `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + FftNum + Debug + Display + Default + Send + Sync + 'static
{
    /// Absolute tolerance used by adaptive quadrature when none is given.
    fn quadrature_tolerance() -> Self;

    /// Tolerance for structural checks (orthogonality, unitarity).
    fn structural_tolerance() -> Self;

    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn quadrature_tolerance() -> Self {
        1e-10
    }

    fn structural_tolerance() -> Self {
        1e-12
    }
}

impl Real for f32 {
    fn quadrature_tolerance() -> Self {
        1e-5
    }

    fn structural_tolerance() -> Self {
        1e-5
    }
}
