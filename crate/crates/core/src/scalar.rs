//! Floating-point abstraction shared by every numeric module.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, NumAssign};

/// Real scalar the tracker is generic over: `f32` or `f64`.
pub trait Scalar:
    rustfft::FftNum + Float + FloatConst + NumAssign + Default + Display + Debug + Send + Sync + 'static
{
    /// Converts an `f64` literal. Lossy for `f32`.
    fn of(v: f64) -> Self;

    fn as_f64(self) -> f64;
}

impl Scalar for f32 {
    #[inline]
    fn of(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    #[inline]
    fn of(v: f64) -> Self {
        v
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

/// Index of the largest value, ties resolved toward the lowest index.
///
/// With row-major storage this is "lowest row, then lowest column".
pub fn argmax<T: Scalar>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
