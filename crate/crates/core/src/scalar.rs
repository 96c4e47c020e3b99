//! Numeric traits the model and predictor are generic over.

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// Any exact or floating scalar the cost and completion-time model can run on:
/// `f32`, `f64`, or a rational such as `num_rational::Ratio<i64>`.
pub trait Scalar: Num + Copy + PartialOrd + Debug + FromPrimitive + ToPrimitive {
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable in scalar")
    }
}

impl<T> Scalar for T where T: Num + Copy + PartialOrd + Debug + FromPrimitive + ToPrimitive {}

/// Floating-point scalars used by the neural predictor.
pub trait Real: Scalar + Float + Default + Send + Sync + 'static {
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in float")
    }
}

impl Real for f32 {}
impl Real for f64 {}
