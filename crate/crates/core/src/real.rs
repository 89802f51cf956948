//! Scalar abstraction for the real-valued quantities (bits per instance,
//! edge rates, approximation ratios). Everything combinatorial stays in
//! exact integers; only the final `log2` and the rate arithmetic go
//! through this trait.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};
use serde::Serialize;

pub trait Real: Float + FromPrimitive + Debug + Display + Serialize + Send + Sync + 'static {
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("integer count representable as float")
    }

    /// `log2(n)` for a positive integer count; `log2(0)` is reported as 0.
    fn log2_count(n: u64) -> Self {
        if n <= 1 {
            Self::zero()
        } else {
            Self::from_count(n).log2()
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}
