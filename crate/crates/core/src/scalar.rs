//! Scalar abstraction for the rehandle analytics.
//!
//! The analytic kernel only needs exact construction of ratios of small
//! integers, ring arithmetic and a lossy export to `f64`, so both binary
//! floats and arbitrary-precision rationals qualify.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, ToPrimitive};
use std::fmt::Debug;
use std::ops::AddAssign;

pub trait Scalar: Num + Clone + PartialOrd + Debug + AddAssign + Send + Sync {
    /// `numer / denom` in this scalar type. `denom` must be non-zero.
    fn from_ratio(numer: u64, denom: u64) -> Self;

    fn to_f64(&self) -> f64;
}

impl Scalar for f64 {
    fn from_ratio(numer: u64, denom: u64) -> Self {
        numer as f64 / denom as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for f32 {
    fn from_ratio(numer: u64, denom: u64) -> Self {
        (numer as f64 / denom as f64) as f32
    }

    fn to_f64(&self) -> f64 {
        *self as f64
    }
}

impl Scalar for BigRational {
    fn from_ratio(numer: u64, denom: u64) -> Self {
        BigRational::new(BigInt::from(numer), BigInt::from(denom))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}
