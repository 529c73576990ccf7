//! Scalar abstraction for the simulation state space.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::Float;

/// Floating-point scalar usable for particle states and path arithmetic.
///
/// Random draws and law-level bookkeeping are produced in `f64`; `from_f64`
/// is the single conversion point into the working precision.
pub trait Scalar:
    Float + Sum + Debug + Display + Send + Sync + Default + 'static
{
    fn from_f64(x: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

/// Squared Euclidean norm of a state slice.
#[inline]
pub fn norm_sq<S: Scalar>(xs: &[S]) -> S {
    xs.iter().map(|&x| x * x).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions_roundtrip() {
        assert_eq!(<f64 as Scalar>::from_f64(1.5), 1.5);
        assert_eq!(<f32 as Scalar>::from_f64(1.5), 1.5f32);
        assert_eq!(1.25f32.as_f64(), 1.25);
    }

    #[test]
    fn norm_sq_matches_manual() {
        assert_eq!(norm_sq(&[3.0f64, 4.0]), 25.0);
    }
}
