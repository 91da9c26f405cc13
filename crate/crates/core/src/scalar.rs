//! Scalar abstraction for the arithmetic kernels.
//!
//! The operator kernels and truncated power series are generic over the
//! coefficient type: exact integers (`BigInt`) for path-count recursions,
//! exact rationals (`BigRational`) for series identities, `Complex64` or
//! `f64` for numerical evaluation. [`RingScalar`] is what the kernel
//! algebra needs; [`FieldScalar`] adds division and integer embedding for
//! series exp/log.

use num_traits::{FromPrimitive, One, Zero};
use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Commutative-ring operations, by value, plus the plumbing every
/// coefficient type carries.
pub trait RingScalar:
    Clone
    + PartialEq
    + Debug
    + Display
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Send
    + Sync
    + 'static
{
}

impl<T> RingScalar for T where
    T: Clone
        + PartialEq
        + Debug
        + Display
        + Zero
        + One
        + Neg<Output = T>
        + Add<Output = T>
        + Sub<Output = T>
        + Mul<Output = T>
        + Send
        + Sync
        + 'static
{
}

/// Ring scalars with exact (or floating) division and an embedding of the
/// integers, as needed by series exponentials and logarithms.
pub trait FieldScalar: RingScalar + Div<Output = Self> + FromPrimitive {
    /// The image of `n` under the canonical embedding of the integers.
    fn from_int(n: i64) -> Self {
        Self::from_i64(n).expect("integer embeds into scalar")
    }

    /// The fraction `p/q` as a scalar; `q` must be nonzero.
    fn from_ratio(p: i64, q: i64) -> Self {
        assert!(q != 0, "zero denominator");
        Self::from_int(p) / Self::from_int(q)
    }
}

impl<T> FieldScalar for T where T: RingScalar + Div<Output = T> + FromPrimitive {}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_complex::Complex64;
    use num_rational::BigRational;

    fn takes_ring<T: RingScalar>() {}
    fn takes_field<T: FieldScalar>() {}

    #[test]
    fn scalar_instances() {
        takes_ring::<BigInt>();
        takes_ring::<BigRational>();
        takes_ring::<Complex64>();
        takes_ring::<f64>();
        takes_field::<BigRational>();
        takes_field::<Complex64>();
        takes_field::<f64>();
    }

    #[test]
    fn ratio_embedding() {
        assert_eq!(BigRational::from_ratio(3, 4), BigRational::new(3.into(), 4.into()));
        assert_eq!(f64::from_ratio(1, 2), 0.5);
    }
}
