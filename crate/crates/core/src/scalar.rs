//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! Graph lengths, flows and operator entries are all written against
//! [`Scalar`], so the same code runs in `f64` for speed and in
//! [`BigRational`] when identities have to hold exactly.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

/// Real scalar field used for lengths, flows and matrix entries.
pub trait Scalar:
    Clone + Debug + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// `true` when arithmetic is exact (no rounding).
    const EXACT: bool;

    /// Default absolute tolerance for comparisons that are exact in theory.
    fn tolerance() -> Self;

    /// `num / den` in this field.
    fn from_ratio(num: i64, den: i64) -> Self;

    /// Lossy conversion for reports; `NaN` if not representable.
    fn as_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Converts an `f64`, exactly when the field allows it.
    fn from_f64_value(x: f64) -> Option<Self> {
        if x.is_finite() {
            Self::from_f64(x)
        } else {
            None
        }
    }

    fn is_negligible(&self, tol: &Self) -> bool {
        self.abs() <= *tol
    }

    fn close_to(&self, other: &Self, tol: &Self) -> bool {
        (self.clone() - other.clone()).abs() <= *tol
    }

    /// Strictly above `tol`.
    fn exceeds(&self, tol: &Self) -> bool {
        *self > *tol
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn tolerance() -> Self {
        1e-9
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn tolerance() -> Self {
        1e-4
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f32 / den as f32
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn tolerance() -> Self {
        BigRational::from_integer(BigInt::from(0))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
}

pub(crate) fn min_of<S: Scalar>(a: S, b: S) -> S {
    if b < a {
        b
    } else {
        a
    }
}

pub(crate) fn sum<S: Scalar, I: IntoIterator<Item = S>>(items: I) -> S {
    items.into_iter().fold(S::zero(), |acc, x| acc + x)
}

/// Total order for sorting; incomparable values (NaN) compare equal.
pub(crate) fn cmp<S: Scalar>(a: &S, b: &S) -> std::cmp::Ordering {
    a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal)
}
