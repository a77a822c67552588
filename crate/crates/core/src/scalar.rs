//! Scalar abstraction for the numeric routines.

use std::fmt;

use num_traits::{Float, FromPrimitive};
use rand::distr::uniform::SampleUniform;

/// Floating-point scalar the geometry, board, detection, scoring, augment,
/// and eval routines are generic over: `f32` or `f64`.
///
/// The pipeline tolerances in [`crate::tolerances`] assume `f64`; `f32`
/// instantiations are valid but looser.
pub trait Scalar:
    Float + FromPrimitive + SampleUniform + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` constant (tolerances, degree steps).
    fn c(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant converts to scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
