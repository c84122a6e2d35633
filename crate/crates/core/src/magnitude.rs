//! Positive quantities of the form `mantissa · 2^exp2`, for thresholds far
//! too small to write down as a plain rational.

use core::cmp::Ordering;
use core::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::scalar::rational_to_f64;

/// A strictly positive number `mantissa · 2^exp2`.
#[derive(Debug, Clone)]
pub struct Magnitude {
    mantissa: BigRational,
    exp2: BigInt,
}

/// Exponents below this are never folded into the mantissa.
const FOLD_LIMIT: u64 = 4096;

impl Magnitude {
    /// Panics unless `value > 0`.
    pub fn from_rational(value: BigRational) -> Self {
        assert!(value.is_positive(), "magnitudes are strictly positive");
        Magnitude { mantissa: value, exp2: BigInt::zero() }
    }

    /// Exactly `2^exp2`.
    pub fn pow2(exp2: BigInt) -> Self {
        Magnitude { mantissa: BigRational::one(), exp2 }
    }

    pub fn mantissa(&self) -> &BigRational {
        &self.mantissa
    }

    pub fn exp2(&self) -> &BigInt {
        &self.exp2
    }

    /// The exact rational value when the exponent is small enough to expand.
    pub fn to_rational(&self) -> Option<BigRational> {
        let e = self.exp2.to_i64()?;
        if e.unsigned_abs() > FOLD_LIMIT {
            return None;
        }
        let p = BigRational::from_integer(BigInt::one() << e.unsigned_abs() as usize);
        Some(if e >= 0 { &self.mantissa * p } else { &self.mantissa / p })
    }

    /// Nearest `f64`; underflows to 0 and overflows to infinity.
    pub fn to_f64(&self) -> f64 {
        let m = rational_to_f64(&self.mantissa);
        match self.exp2.to_i32() {
            Some(e) => {
                // Split to avoid intermediate overflow of 2^e.
                let half = e / 2;
                m * libm::pow(2.0, f64::from(half)) * libm::pow(2.0, f64::from(e - half))
            }
            None if self.exp2.is_negative() => 0.0,
            None => f64::INFINITY,
        }
    }

    /// ⌊log₂ x⌋.
    pub fn floor_log2(&self) -> BigInt {
        BigInt::from(floor_log2_rational(&self.mantissa)) + &self.exp2
    }

    pub fn mul_rational(&self, k: &BigRational) -> Self {
        assert!(k.is_positive());
        Magnitude { mantissa: &self.mantissa * k, exp2: self.exp2.clone() }.normalized()
    }

    pub fn div_rational(&self, k: &BigRational) -> Self {
        assert!(k.is_positive());
        Magnitude { mantissa: &self.mantissa / k, exp2: self.exp2.clone() }.normalized()
    }

    pub fn mul(&self, other: &Magnitude) -> Self {
        Magnitude { mantissa: &self.mantissa * &other.mantissa, exp2: &self.exp2 + &other.exp2 }.normalized()
    }

    pub fn powu(&self, k: u32) -> Self {
        Magnitude {
            mantissa: num_traits::pow(self.mantissa.clone(), k as usize),
            exp2: &self.exp2 * BigInt::from(k),
        }
        .normalized()
    }

    /// Moves powers of two out of the mantissa so its size stays bounded.
    fn normalized(mut self) -> Self {
        let shift = floor_log2_rational(&self.mantissa);
        if shift != 0 {
            let p = BigRational::from_integer(BigInt::one() << shift.unsigned_abs() as usize);
            if shift > 0 {
                self.mantissa /= p;
            } else {
                self.mantissa *= p;
            }
            self.exp2 += BigInt::from(shift);
        }
        self
    }

    /// Mantissa scaled into [1, 2) together with ⌊log₂ x⌋.
    fn split(&self) -> (BigRational, BigInt) {
        let k = floor_log2_rational(&self.mantissa);
        let p = BigRational::from_integer(BigInt::one() << k.unsigned_abs() as usize);
        let m = if k >= 0 { &self.mantissa / p } else { &self.mantissa * p };
        (m, &self.exp2 + BigInt::from(k))
    }
}

impl From<BigRational> for Magnitude {
    fn from(value: BigRational) -> Self {
        Magnitude::from_rational(value)
    }
}

impl PartialEq for Magnitude {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Magnitude {}

impl PartialOrd for Magnitude {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Magnitude {
    fn cmp(&self, other: &Self) -> Ordering {
        let (ma, ea) = self.split();
        let (mb, eb) = other.split();
        ea.cmp(&eb).then_with(|| ma.cmp(&mb))
    }
}

impl fmt::Display for Magnitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_rational() {
            Some(r) => write!(f, "{}", crate::scalar::format_rational(&r)),
            None => write!(f, "{}·2^{}", crate::scalar::format_rational(&self.mantissa), self.exp2),
        }
    }
}

/// ⌊log₂ x⌋ for a positive rational.
pub fn floor_log2_rational(x: &BigRational) -> i64 {
    debug_assert!(x.is_positive());
    let p = x.numer().magnitude();
    let q = x.denom().magnitude();
    let k = p.bits() as i64 - q.bits() as i64;
    // p/q lies in [2^(k-1), 2^(k+1)); decide between k-1 and k.
    let at_least = if k >= 0 { *p >= q << k as usize } else { p << (-k) as usize >= *q };
    if at_least {
        k
    } else {
        k - 1
    }
}

/// Smallest integer ≥ x for a nonnegative rational, as an unsigned integer.
pub fn ceil_nonneg(x: &BigRational) -> BigUint {
    let c = x.ceil().to_integer();
    c.to_biguint().unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    #[test]
    fn floor_log2_cases() {
        assert_eq!(floor_log2_rational(&ratio(1, 1)), 0);
        assert_eq!(floor_log2_rational(&ratio(3, 1)), 1);
        assert_eq!(floor_log2_rational(&ratio(4, 1)), 2);
        assert_eq!(floor_log2_rational(&ratio(1, 2)), -1);
        assert_eq!(floor_log2_rational(&ratio(1, 3)), -2);
        assert_eq!(floor_log2_rational(&ratio(5, 8)), -1);
    }

    #[test]
    fn ordering_mixes_exponents() {
        let tiny = Magnitude::pow2(-(BigInt::one() << 65usize));
        let small = Magnitude::from_rational(ratio(1, 1_000_000));
        assert!(tiny < small);
        let a = Magnitude::from_rational(ratio(3, 4));
        let b = Magnitude::pow2(BigInt::from(-2)).mul_rational(&ratio(3, 1));
        assert_eq!(a, b);
        assert_eq!(b.to_rational(), Some(ratio(3, 4)));
        assert!(tiny.to_rational().is_none());
        assert_eq!(tiny.to_f64(), 0.0);
    }

    #[test]
    fn arithmetic() {
        let d = Magnitude::from_rational(ratio(1, 2));
        assert_eq!(d.powu(4).to_rational(), Some(ratio(1, 16)));
        assert_eq!(d.div_rational(&ratio(8, 1)).to_rational(), Some(ratio(1, 16)));
        assert_eq!(d.mul(&d).floor_log2(), BigInt::from(-2));
        assert_eq!(ceil_nonneg(&ratio(7, 2)), BigUint::from(4u32));
    }
}
