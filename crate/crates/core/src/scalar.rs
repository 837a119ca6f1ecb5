//! Numeric types usable for pairwise probabilities and their sums.
//!
//! Pairwise entries are rationals with small denominators (`1/2`,
//! `(r + 1)/(k + 1)`), so the whole matrix pipeline can run either in
//! floating point or exactly over [`BigRational`].

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{NumAssignRef, ToPrimitive};

pub trait Scalar: NumAssignRef + Clone + PartialOrd + Debug + Send + Sync + 'static {
    /// `numer / denom`; `denom` must be nonzero.
    fn from_ratio(numer: u64, denom: u64) -> Self;

    fn from_count(count: u64) -> Self {
        Self::from_ratio(count, 1)
    }

    fn half() -> Self {
        Self::from_ratio(1, 2)
    }

    fn to_f64(&self) -> f64;

    /// True when arithmetic on this type is exact.
    fn is_exact() -> bool {
        false
    }
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
        f64::from(*self)
    }
}

impl Scalar for BigRational {
    fn from_ratio(numer: u64, denom: u64) -> Self {
        BigRational::new(BigInt::from(numer), BigInt::from(denom))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn is_exact() -> bool {
        true
    }
}
