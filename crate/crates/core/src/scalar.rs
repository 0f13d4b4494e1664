//! Numeric element type used by feature matrices and the aggregation engine.
//!
//! Everything that touches embedding values is generic over [`Scalar`]; the
//! crate root exposes `f64` and `f32` aliases. Cost accounting never depends on
//! the host scalar: the simulated device always stores 4-byte floats.

use std::fmt::Debug;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating-point element of an embedding matrix.
pub trait Scalar:
    Float + NumAssign + FromPrimitive + Sum + Debug + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, used for generated inputs and constants.
    fn from_f64_lossy(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).unwrap_or_else(Self::nan)
    }

    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Bytes per embedding element on the simulated device.
pub const DEVICE_FLOAT_BYTES: usize = 4;
