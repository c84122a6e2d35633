//! Arithmetic abstraction shared by the numeric (`f64`) and exact
//! (`BigRational`) solver paths.

use core::fmt::Debug;
use core::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

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
{
    /// True when arithmetic is exact (no rounding).
    const EXACT: bool;

    fn from_exact(value: &BigRational) -> Self;
    fn from_f64(value: f64) -> Self;
    fn approx_f64(&self) -> f64;

    fn abs_value(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// Tolerance used to declare two values tied. Exact arithmetic never
    /// needs one, whatever the configured numeric tolerance is.
    fn tie_tolerance(configured: f64) -> Self {
        if Self::EXACT {
            Self::zero()
        } else {
            Self::from_f64(configured)
        }
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_exact(value: &BigRational) -> Self {
        rational_to_f64(value)
    }
    fn from_f64(value: f64) -> Self {
        value
    }
    fn approx_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_exact(value: &BigRational) -> Self {
        value.clone()
    }
    fn from_f64(value: f64) -> Self {
        BigRational::from_float(value).unwrap_or_else(Zero::zero)
    }
    fn approx_f64(&self) -> f64 {
        rational_to_f64(self)
    }
    fn abs_value(&self) -> Self {
        Signed::abs(self)
    }
}

/// Converts a rational to the nearest `f64`, tolerating numerators and
/// denominators too large for `f64` on their own.
pub fn rational_to_f64(value: &BigRational) -> f64 {
    if let Some(v) = value.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    let numer = value.numer();
    let denom = value.denom();
    // Scale both to ~60 significant bits before dividing.
    let n_shift = numer.bits() as i64 - 60;
    let d_shift = denom.bits() as i64 - 60;
    let n = shift_right(numer, n_shift).to_f64().unwrap_or(0.0);
    let d = shift_right(denom, d_shift).to_f64().unwrap_or(1.0);
    let mantissa = n / d;
    mantissa * libm::pow(2.0, (n_shift - d_shift) as f64)
}

fn shift_right(value: &BigInt, by: i64) -> BigInt {
    if by > 0 {
        value >> (by as usize)
    } else {
        value << ((-by) as usize)
    }
}

/// Parses a decimal literal such as `-0.95`, `12` or `1.5e-3` into an exact
/// rational.
pub fn parse_decimal(text: &str) -> Option<BigRational> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(i) => (&text[..i], text[i + 1..].parse::<i64>().ok()?),
        None => (text, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.find('.') {
        Some(i) => (&digits[..i], &digits[i + 1..]),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let mut all = alloc::string::String::with_capacity(int_part.len() + frac_part.len());
    all.push_str(int_part);
    all.push_str(frac_part);
    let numer: BigInt = if all.is_empty() { BigInt::zero() } else { all.parse().ok()? };
    let scale = exponent - frac_part.len() as i64;
    let ten = BigInt::from(10u32);
    let mut value = BigRational::from_integer(numer);
    if scale >= 0 {
        value *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if negative { -value } else { value })
}

/// Parses `p/q`, an integer, or a decimal literal.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    if let Some((p, q)) = text.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    parse_decimal(text)
}

/// `p/q` (or `p` for integers) rendering of a rational.
pub fn format_rational(value: &BigRational) -> alloc::string::String {
    use alloc::string::ToString;
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        alloc::format!("{}/{}", value.numer(), value.denom())
    }
}

pub fn ratio(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}
