//! Number types used by every solver in the crate.
//!
//! All algorithms are generic over [`Scalar`]. The default instantiation is
//! [`Exact`] (arbitrary precision rationals), where every comparison is exact.
//! [`Float`] trades exactness for speed; its comparisons treat values within a
//! relative tolerance as equal.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::ParseScalarError;

/// Exact rational arithmetic.
pub type Exact = BigRational;

/// Default comparison tolerance for [`Float`].
pub const DEFAULT_EPSILON: f64 = 1e-9;

static EPSILON_BITS: AtomicU64 = AtomicU64::new(0x3E11_2E0B_E826_D695); // 1e-9

/// Field operations plus a total, mode-aware comparison.
pub trait Scalar:
    Clone
    + fmt::Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// True for exact arithmetic.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_rational(value: &BigRational) -> Self;
    fn to_f64(&self) -> f64;

    /// Total order used for every stop/continue classification.
    fn compare(&self, other: &Self) -> Ordering;

    /// Canonical text form: `p/q` for rationals, shortest round-trip decimal for floats.
    fn to_canonical_string(&self) -> String;

    fn from_int(value: i64) -> Self {
        Self::from_rational(&BigRational::from_integer(BigInt::from(value)))
    }

    fn same(&self, other: &Self) -> bool {
        self.compare(other) == Ordering::Equal
    }

    fn is_zero(&self) -> bool {
        self.same(&Self::zero())
    }

    fn is_positive(&self) -> bool {
        self.compare(&Self::zero()) == Ordering::Greater
    }

    fn is_negative(&self) -> bool {
        self.compare(&Self::zero()) == Ordering::Less
    }

    fn max_of(self, other: Self) -> Self {
        if other.compare(&self) == Ordering::Greater {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other.compare(&self) == Ordering::Less {
            other
        } else {
            self
        }
    }

    fn abs_value(&self) -> Self {
        if self.is_negative() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn powi(&self, exponent: usize) -> Self {
        let mut out = Self::one();
        for _ in 0..exponent {
            out = out * self.clone();
        }
        out
    }

    /// Parses a rational literal (`"3"`, `"-1/3"`, `"0.4"`) into this scalar.
    fn parse(text: &str) -> Result<Self, ParseScalarError> {
        parse_rational(text).map(|r| Self::from_rational(&r))
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn zero() -> Self {
        Zero::zero()
    }

    fn one() -> Self {
        One::one()
    }

    fn from_rational(value: &BigRational) -> Self {
        value.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn compare(&self, other: &Self) -> Ordering {
        self.cmp(other)
    }

    fn to_canonical_string(&self) -> String {
        if self.is_integer() {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }

    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }

    fn abs_value(&self) -> Self {
        self.abs()
    }
}

/// Double precision with tolerance-aware comparison.
///
/// Two values compare equal when `|a - b| <= eps * max(1, |a|, |b|)`. The
/// tolerance is process-wide; see [`Float::set_epsilon`].
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Float(pub f64);

impl Float {
    pub fn set_epsilon(eps: f64) {
        assert!(
            eps >= 0.0 && eps.is_finite(),
            "epsilon must be finite and nonnegative"
        );
        EPSILON_BITS.store(eps.to_bits(), AtomicOrdering::Relaxed);
    }

    pub fn epsilon() -> f64 {
        f64::from_bits(EPSILON_BITS.load(AtomicOrdering::Relaxed))
    }
}

macro_rules! float_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait for Float {
            type Output = Float;
            fn $method(self, rhs: Float) -> Float {
                Float(self.0 $op rhs.0)
            }
        }
    };
}

float_binop!(Add, add, +);
float_binop!(Sub, sub, -);
float_binop!(Mul, mul, *);
float_binop!(Div, div, /);

impl Neg for Float {
    type Output = Float;
    fn neg(self) -> Float {
        Float(-self.0)
    }
}

impl Scalar for Float {
    const EXACT: bool = false;

    fn zero() -> Self {
        Float(0.0)
    }

    fn one() -> Self {
        Float(1.0)
    }

    fn from_rational(value: &BigRational) -> Self {
        Float(ToPrimitive::to_f64(value).unwrap_or(f64::NAN))
    }

    fn to_f64(&self) -> f64 {
        self.0
    }

    fn compare(&self, other: &Self) -> Ordering {
        let scale = 1f64.max(self.0.abs()).max(other.0.abs());
        if (self.0 - other.0).abs() <= Float::epsilon() * scale {
            Ordering::Equal
        } else if self.0 < other.0 {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    }

    fn to_canonical_string(&self) -> String {
        format!("{}", self.0)
    }
}

impl fmt::Display for Float {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Parses `"7"`, `"-2/3"`, `"0.25"` or `"-.5"` into an exact rational.
///
/// Decimals are read literally, so `"0.4"` is exactly `4/10`.
pub fn parse_rational(text: &str) -> Result<BigRational, ParseScalarError> {
    let err = || ParseScalarError(text.to_string());
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(err());
    }
    if let Some((num, den)) = trimmed.split_once('/') {
        let num = parse_decimal(num.trim()).ok_or_else(err)?;
        let den = parse_decimal(den.trim()).ok_or_else(err)?;
        if Zero::is_zero(&den) {
            return Err(err());
        }
        return Ok(num / den);
    }
    parse_decimal(trimmed).ok_or_else(err)
}

fn parse_decimal(text: &str) -> Option<BigRational> {
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().ok()?
    };
    let denom = num_traits::pow(BigInt::from(10u32), frac_part.len());
    let value = BigRational::new(numer, denom);
    Some(if negative { -value } else { value })
}

/// Decimal rendering rounded to 12 significant digits.
pub fn decimal_12(value: f64) -> String {
    if !value.is_finite() {
        return value.to_string();
    }
    let rounded: f64 = format!("{value:.11e}").parse().unwrap_or(value);
    format!("{rounded}")
}
