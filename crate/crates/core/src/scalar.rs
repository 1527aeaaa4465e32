//! Scalar fields used throughout the crate: exact rationals and doubles.
//!
//! Every routine that does arithmetic is generic over [`Scalar`], so one code
//! path serves both modes and the two never mix inside a computation.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arbitrary precision rational.
pub type Rational = BigRational;

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    /// True for the rational field.
    const EXACT: bool;

    fn from_i64(n: i64) -> Self;

    fn ratio(num: i64, den: i64) -> Self;

    /// Conversion from a rational. Doubles round to nearest.
    fn from_rational(q: &Rational) -> Self;

    fn to_f64(&self) -> f64;

    fn abs_val(&self) -> Self;

    /// Square root. Exact mode returns `None` unless the input is a perfect square.
    fn sqrt_checked(&self) -> Option<Self>;

    /// Real n-th root (odd n accepts negative input). Exact mode requires a perfect power.
    fn nth_root_checked(&self, n: u32) -> Option<Self>;

    /// Zero test used by pivoting and rank routines. `tol` is ignored in exact mode.
    fn near_zero(&self, tol: f64) -> bool;

    fn powi(&self, n: i32) -> Self {
        let mut base = if n < 0 { Self::one() / self.clone() } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            base = base.clone() * base;
            e >>= 1;
        }
        acc
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_i64(n: i64) -> Self {
        n as f64
    }

    fn ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn from_rational(q: &Rational) -> Self {
        ToPrimitive::to_f64(q).unwrap_or(f64::NAN)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn abs_val(&self) -> Self {
        self.abs()
    }

    fn sqrt_checked(&self) -> Option<Self> {
        if *self < 0.0 {
            None
        } else {
            Some(self.sqrt())
        }
    }

    fn nth_root_checked(&self, n: u32) -> Option<Self> {
        if n == 0 {
            return None;
        }
        if *self < 0.0 {
            if n % 2 == 0 {
                return None;
            }
            return Some(-(-self).powf(1.0 / n as f64));
        }
        Some(self.powf(1.0 / n as f64))
    }

    fn near_zero(&self, tol: f64) -> bool {
        self.abs() <= tol
    }
}

fn exact_int_root(x: &BigInt, n: u32) -> Option<BigInt> {
    if x.is_negative() {
        if n % 2 == 0 {
            return None;
        }
        return exact_int_root(&-x, n).map(|r| -r);
    }
    let r = x.nth_root(n);
    if num_traits::pow(r.clone(), n as usize) == *x {
        Some(r)
    } else {
        None
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_i64(n: i64) -> Self {
        Rational::from_integer(BigInt::from(n))
    }

    fn ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_rational(q: &Rational) -> Self {
        q.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn abs_val(&self) -> Self {
        self.abs()
    }

    fn sqrt_checked(&self) -> Option<Self> {
        self.nth_root_checked(2)
    }

    fn nth_root_checked(&self, n: u32) -> Option<Self> {
        if n == 0 {
            return None;
        }
        let num = exact_int_root(self.numer(), n)?;
        let den = exact_int_root(self.denom(), n)?;
        Some(Rational::new(num, den))
    }

    fn near_zero(&self, _tol: f64) -> bool {
        self.is_zero()
    }
}

/// Shorthand for an exact rational `num/den`.
pub fn q(num: i64, den: i64) -> Rational {
    Rational::ratio(num, den)
}

/// Parses `P/Q` or an integer into an exact rational.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    let (n, d) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let n: BigInt = n.parse().ok()?;
    let d: BigInt = d.parse().ok()?;
    if d.is_zero() {
        return None;
    }
    Some(Rational::new(n, d))
}

/// Renders a rational as `p/q`, or `p` when integral.
pub fn format_rational(x: &Rational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}
