//! Scalar abstraction for the symbolic layer.
//!
//! Polynomial and template construction is generic over [`Scalar`] so the same
//! code runs in exact rational arithmetic or in floating point. Floating-point
//! scalars prune coefficients whose magnitude falls below a fixed threshold
//! (`1e-12` for `f64`, `1e-6` for `f32`); rationals prune only exact zeros.

use std::fmt::{Debug, Display};
use std::ops::Neg;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational used by the exact pipeline.
pub type Rational = BigRational;

/// Pruning threshold applied to `f64` coefficients.
pub const F64_PRUNE: f64 = 1e-12;
/// Pruning threshold applied to `f32` coefficients.
pub const F32_PRUNE: f32 = 1e-6;

pub trait Scalar:
    Clone + Debug + Display + PartialEq + PartialOrd + Num + Signed + Neg<Output = Self> + Send + Sync + 'static
{
    /// Converts a double. Rationals take the exact binary value of `v`.
    fn from_f64(v: f64) -> Self;
    fn to_f64(&self) -> f64;
    /// `num / den` with `den != 0`.
    fn from_ratio(num: i64, den: i64) -> Self;
    /// True when the value should be treated as an exact zero.
    fn is_negligible(&self) -> bool;

    fn from_i64(v: i64) -> Self {
        Self::from_ratio(v, 1)
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn is_negligible(&self) -> bool {
        self.abs() <= F64_PRUNE
    }
}

impl Scalar for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn to_f64(&self) -> f64 {
        *self as f64
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f32 / den as f32
    }
    fn is_negligible(&self) -> bool {
        self.abs() <= F32_PRUNE
    }
}

impl Scalar for BigRational {
    fn from_f64(v: f64) -> Self {
        // Non-finite input has no rational value; callers validate beforehand.
        BigRational::from_float(v).unwrap_or_else(BigRational::zero)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or_else(|| {
            let n = self.numer().to_f64().unwrap_or(f64::NAN);
            let d = self.denom().to_f64().unwrap_or(f64::NAN);
            n / d
        })
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn is_negligible(&self) -> bool {
        self.is_zero()
    }
    fn from_i64(v: i64) -> Self {
        <BigRational as FromPrimitive>::from_i64(v).unwrap_or_else(BigRational::one)
    }
}

/// `base^exp` by repeated multiplication.
pub fn pow<S: Scalar>(base: &S, exp: u32) -> S {
    let mut acc = S::one();
    for _ in 0..exp {
        acc = acc * base.clone();
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_from_f64_is_exact() {
        let r = <Rational as Scalar>::from_f64(0.5);
        assert_eq!(r, Rational::from_ratio(1, 2));
        let r = <Rational as Scalar>::from_f64(0.1);
        assert_eq!(Scalar::to_f64(&r), 0.1);
    }

    #[test]
    fn pruning_thresholds() {
        assert!(1e-13f64.is_negligible());
        assert!(!1e-11f64.is_negligible());
        assert!(Rational::from_ratio(0, 3).is_negligible());
        assert!(!Rational::from_ratio(1, 1_000_000_000).is_negligible());
    }

    #[test]
    fn integer_power() {
        assert_eq!(pow(&3.0f64, 4), 81.0);
        assert_eq!(pow(&Rational::from_ratio(1, 2), 3), Rational::from_ratio(1, 8));
    }
}
