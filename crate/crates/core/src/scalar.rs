//! Scalar abstraction shared by every module.

use nalgebra as na;
use num_traits as nt;

/// Real floating point type the library is generic over (`f32` or `f64`).
pub trait Real: Copy + na::RealField + nt::FromPrimitive + nt::ToPrimitive + Send + Sync {
    /// Default absolute tolerance used when validating Hermiticity, traces and positivity.
    const VALIDATION_TOL: f64;
    /// Default residual tolerance for the inverse Gibbs solver.
    const SOLVER_TOL: f64;

    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        na::convert(x)
    }

    /// Converts `self` into an `f64`.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn count(n: usize) -> Self {
        Self::lit(n as f64)
    }
}

impl Real for f32 {
    const VALIDATION_TOL: f64 = 1e-5;
    const SOLVER_TOL: f64 = 1e-5;
}

impl Real for f64 {
    const VALIDATION_TOL: f64 = 1e-12;
    const SOLVER_TOL: f64 = 1e-10;
}
