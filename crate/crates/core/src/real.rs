//! Scalar abstraction for the numeric kernels.
//!
//! The statistics, calibration and boosted-tree code is generic over [`Real`]
//! so it can run in `f32` or `f64`; the concrete pipeline pins
//! [`crate::Scalar`] (= `f64`) at the crate root.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by the numeric kernels.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Conversion from an `f64` constant baked into a formula.
    fn of(x: f64) -> Self {
        Self::from(x).expect("constant not representable in scalar type")
    }

    /// Lossy view as `f64`, for tail probabilities and formatting.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar not representable as f64")
    }
}

impl<T> Real for T where
    T: Float + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
}
