//! Scalar abstraction shared by the combinatorial and numerical code.
//!
//! Everything that only needs field arithmetic (coalition tables, Shapley
//! values, dividends, reward cumulation, incentive checks) is written against
//! [`Scalar`], so it runs on `f32`, `f64` and exact [`BigRational`] alike.
//! Anything needing `exp`/`ln`/`sqrt` (time discounting, Gaussian processes)
//! requires [`RealScalar`].

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FromPrimitive, Num, NumAssign, Signed, ToPrimitive};

pub trait Scalar:
    Clone + Debug + PartialOrd + Num + NumAssign + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Smallest difference accepted as evidence of a strict inequality.
    ///
    /// Floating types need a margin above round-off; exact types use zero.
    fn strict_margin() -> Self;

    /// Converts an `f64` literal, panicking on NaN or infinity.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).unwrap_or_else(|| panic!("{x} is not representable"))
    }

    fn count(k: usize) -> Self {
        Self::from_usize(k).expect("count fits in scalar")
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn is_finite_value(&self) -> bool {
        self.to_f64_lossy().is_finite()
    }
}

impl Scalar for f64 {
    fn strict_margin() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    fn strict_margin() -> Self {
        1e-5
    }
}

impl Scalar for BigRational {
    fn strict_margin() -> Self {
        BigRational::from_integer(BigInt::from(0))
    }

    fn is_finite_value(&self) -> bool {
        true
    }
}

/// Scalars with transcendental functions.
pub trait RealScalar: Scalar + Float {}

impl RealScalar for f64 {}
impl RealScalar for f32 {}

pub(crate) fn max_of<S: Scalar>(values: &[S]) -> Option<S> {
    values.iter().cloned().fold(None, |acc, v| match acc {
        Some(m) if m >= v => Some(m),
        _ => Some(v),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_literals_are_exact() {
        let q = BigRational::lit(0.25);
        assert_eq!(q, BigRational::new(BigInt::from(1), BigInt::from(4)));
        assert_eq!(BigRational::strict_margin(), BigRational::from_integer(0.into()));
    }

    #[test]
    fn max_of_handles_empty_and_ties() {
        assert_eq!(max_of::<f64>(&[]), None);
        assert_eq!(max_of(&[1.0, 3.0, 3.0, -2.0]), Some(3.0));
    }
}
