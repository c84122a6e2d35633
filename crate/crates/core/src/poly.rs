//! Univariate polynomials with exact rational coefficients, rational
//! functions, Sturm sequences, and real-root isolation.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::scalar::rational_to_f64;

/// Coefficients stored low degree first, with no trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Polynomial {
    coeffs: Vec<BigRational>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn constant(c: BigRational) -> Self {
        Polynomial::new(vec![c])
    }

    pub fn one() -> Self {
        Polynomial::constant(BigRational::one())
    }

    /// The polynomial `γ`.
    pub fn variable() -> Self {
        Polynomial::new(vec![BigRational::zero(), BigRational::one()])
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        Polynomial::new(coeffs.iter().map(|&c| BigRational::from_integer(BigInt::from(c))).collect())
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> BigRational {
        self.coeffs.last().cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn coeff(&self, i: usize) -> BigRational {
        self.coeffs.get(i).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn sign_at(&self, x: &BigRational) -> Ordering {
        self.eval(x).cmp(&BigRational::zero())
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + rational_to_f64(c))
    }

    pub fn scale(&self, k: &BigRational) -> Self {
        Polynomial::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        self.scale(&(BigRational::one() / self.leading()))
    }

    pub fn derivative(&self) -> Self {
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
                .collect(),
        )
    }

    /// Euclidean division; panics on a zero divisor.
    pub fn div_rem(&self, divisor: &Polynomial) -> (Polynomial, Polynomial) {
        let d = divisor.degree().expect("division by the zero polynomial");
        let lead = divisor.leading();
        let mut rem = self.coeffs.clone();
        if rem.len() <= d {
            return (Polynomial::zero(), self.clone());
        }
        let mut quot = vec![BigRational::zero(); rem.len() - d];
        for i in (0..quot.len()).rev() {
            let c = &rem[i + d] / &lead;
            if !c.is_zero() {
                for (j, dc) in divisor.coeffs.iter().enumerate() {
                    rem[i + j] -= &c * dc;
                }
            }
            quot[i] = c;
        }
        rem.truncate(d);
        (Polynomial::new(quot), Polynomial::new(rem))
    }

    pub fn exact_div(&self, divisor: &Polynomial) -> Polynomial {
        let (q, r) = self.div_rem(divisor);
        debug_assert!(r.is_zero(), "inexact polynomial division");
        q
    }

    /// Monic greatest common divisor (zero only when both inputs are zero).
    pub fn gcd(&self, other: &Polynomial) -> Polynomial {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r.monic();
        }
        a.monic()
    }

    /// p / gcd(p, p'): same roots, each simple.
    pub fn squarefree(&self) -> Polynomial {
        if self.degree().unwrap_or(0) == 0 {
            return self.clone();
        }
        let g = self.gcd(&self.derivative());
        self.exact_div(&g).monic()
    }

    /// Real roots of the squarefree part in `[lo, hi)`, in increasing order.
    pub fn isolate_roots(&self, lo: &BigRational, hi: &BigRational) -> Vec<RootInterval> {
        if self.degree().unwrap_or(0) == 0 || lo >= hi {
            return Vec::new();
        }
        let sf = self.squarefree();
        if sf.degree() == Some(1) {
            let r = -sf.coeff(0) / sf.coeff(1);
            if &r >= lo && &r < hi {
                return vec![RootInterval { lo: r.clone(), hi: r }];
            }
            return Vec::new();
        }
        let sturm = SturmSequence::new(&sf);
        let mut out = Vec::new();
        if sf.eval(lo).is_zero() {
            out.push(RootInterval { lo: lo.clone(), hi: lo.clone() });
        }
        isolate_open(&sf, &sturm, lo.clone(), hi.clone(), &mut out);
        for iv in out.iter_mut() {
            snap_rational(&sf, iv);
        }
        out
    }
}

fn midpoint(a: &BigRational, b: &BigRational) -> BigRational {
    (a + b) / BigRational::from_integer(BigInt::from(2))
}

// Tries to pin a root known to lie strictly inside `iv` to an exact rational.
// The probe points are the simplest fractions in the current interval, so
// roots with small denominators are found within a few steps.
fn snap_rational(p: &Polynomial, iv: &mut RootInterval) {
    if iv.is_exact() {
        return;
    }
    let lo_sign = p.sign_at(&iv.lo);
    for _ in 0..48 {
        let r = simplest_between(&iv.lo, &iv.hi);
        match p.sign_at(&r) {
            Ordering::Equal => {
                iv.lo = r.clone();
                iv.hi = r;
                return;
            }
            sg if sg == lo_sign => iv.lo = r,
            _ => iv.hi = r,
        }
    }
}

// Fraction with the smallest denominator strictly between `a < b`.
fn simplest_between(a: &BigRational, b: &BigRational) -> BigRational {
    let fa = a.floor();
    if &(fa.clone() + BigRational::one()) < b {
        return fa + BigRational::one();
    }
    if fa == *a {
        // a is an integer and b ≤ a + 1.
        let y = (b - &fa).recip().floor() + BigRational::one();
        return fa + y.recip();
    }
    let ra = (a - &fa).recip();
    let rb = (b - &fa).recip();
    let inner = simplest_between(&rb, &ra);
    fa + inner.recip()
}

fn isolate_open(
    p: &Polynomial,
    sturm: &SturmSequence,
    a: BigRational,
    b: BigRational,
    out: &mut Vec<RootInterval>,
) {
    let at_b = usize::from(p.eval(&b).is_zero());
    let count = sturm.count(&a, &b) - at_b;
    if count == 0 {
        return;
    }
    if count == 1 && !p.eval(&a).is_zero() && at_b == 0 {
        out.push(RootInterval { lo: a, hi: b });
        return;
    }
    let m = midpoint(&a, &b);
    isolate_open(p, sturm, a, m.clone(), out);
    if p.eval(&m).is_zero() {
        out.push(RootInterval { lo: m.clone(), hi: m.clone() });
    }
    isolate_open(p, sturm, m, b, out);
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|i| self.coeff(i) - rhs.coeff(i)).collect())
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

/// Sturm chain p, p', −rem(p, p'), … with each member scaled by a positive
/// constant to keep coefficients small.
#[derive(Debug, Clone)]
pub struct SturmSequence {
    chain: Vec<Polynomial>,
}

impl SturmSequence {
    pub fn new(p: &Polynomial) -> Self {
        let mut chain = vec![p.clone()];
        let mut next = p.derivative();
        while !next.is_zero() {
            let lead = next.leading().abs();
            let normalized = next.scale(&(BigRational::one() / lead));
            let (_, r) = chain.last().unwrap().div_rem(&normalized);
            chain.push(normalized);
            next = -&r;
        }
        SturmSequence { chain }
    }

    /// Sign changes of the chain at x, zeros skipped.
    pub fn variations(&self, x: &BigRational) -> usize {
        let mut count = 0;
        let mut last = Ordering::Equal;
        for p in &self.chain {
            let s = p.sign_at(x);
            if s == Ordering::Equal {
                continue;
            }
            if last != Ordering::Equal && s != last {
                count += 1;
            }
            last = s;
        }
        count
    }

    /// Number of distinct roots in `(a, b]`.
    pub fn count(&self, a: &BigRational, b: &BigRational) -> usize {
        self.variations(a).saturating_sub(self.variations(b))
    }
}

/// An interval isolating one real root of a squarefree polynomial: either a
/// single rational point, or `lo < hi` with no root at either endpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootInterval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl RootInterval {
    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }
}

/// A real algebraic number: the unique root of `poly` in `interval`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgebraicNumber {
    poly: Polynomial,
    interval: RootInterval,
}

impl AlgebraicNumber {
    /// `poly` must be squarefree and `interval` must isolate one of its roots.
    pub fn new(poly: Polynomial, interval: RootInterval) -> Self {
        AlgebraicNumber { poly, interval }
    }

    pub fn rational(x: BigRational) -> Self {
        AlgebraicNumber {
            poly: Polynomial::new(vec![-x.clone(), BigRational::one()]),
            interval: RootInterval { lo: x.clone(), hi: x },
        }
    }

    pub fn poly(&self) -> &Polynomial {
        &self.poly
    }

    pub fn interval(&self) -> &RootInterval {
        &self.interval
    }

    pub fn lo(&self) -> &BigRational {
        &self.interval.lo
    }

    pub fn hi(&self) -> &BigRational {
        &self.interval.hi
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        self.interval.is_exact().then_some(&self.interval.lo)
    }

    pub fn approx(&self) -> f64 {
        rational_to_f64(&midpoint(&self.interval.lo, &self.interval.hi))
    }

    /// Halves the interval (or pins the root when the midpoint hits it).
    pub fn bisect(&mut self) {
        if self.interval.is_exact() {
            return;
        }
        let m = midpoint(&self.interval.lo, &self.interval.hi);
        let at_m = self.poly.sign_at(&m);
        if at_m == Ordering::Equal {
            self.interval = RootInterval { lo: m.clone(), hi: m };
        } else if at_m == self.poly.sign_at(&self.interval.lo) {
            self.interval.lo = m;
        } else {
            self.interval.hi = m;
        }
    }

    pub fn refine_to(&mut self, width: &BigRational) {
        while self.interval.width() > *width {
            self.bisect();
        }
    }

    /// Sign of `f` at this number, decided exactly.
    pub fn sign_of(&mut self, f: &Polynomial) -> Ordering {
        if f.is_zero() {
            return Ordering::Equal;
        }
        if self.interval.is_exact() {
            return f.sign_at(&self.interval.lo);
        }
        let g = f.gcd(&self.poly);
        if g.degree().unwrap_or(0) > 0 {
            let sturm = SturmSequence::new(&g.squarefree());
            // Any root of g in the interval is a root of poly, hence this number.
            if sturm.count(&self.interval.lo, &self.interval.hi) > 0 {
                return Ordering::Equal;
            }
        }
        let sf = f.squarefree();
        let sturm = SturmSequence::new(&sf);
        loop {
            if self.interval.is_exact() {
                return f.sign_at(&self.interval.lo);
            }
            let lo_sign = sf.sign_at(&self.interval.lo);
            if lo_sign != Ordering::Equal && sturm.count(&self.interval.lo, &self.interval.hi) == 0 {
                return f.sign_at(&self.interval.lo);
            }
            self.bisect();
        }
    }

    /// Exact comparison with a rational.
    pub fn cmp_rational(&mut self, x: &BigRational) -> Ordering {
        loop {
            if *x < self.interval.lo {
                return Ordering::Greater;
            }
            if *x > self.interval.hi {
                return Ordering::Less;
            }
            if self.interval.is_exact() {
                return Ordering::Equal;
            }
            if self.poly.eval(x).is_zero() {
                // Endpoints are not roots, so a root strictly inside is this one.
                return Ordering::Equal;
            }
            self.bisect();
        }
    }

    /// Exact comparison of two algebraic numbers; refines both as needed.
    pub fn cmp_refining(&mut self, other: &mut AlgebraicNumber) -> Ordering {
        if let Some(x) = other.as_rational().cloned() {
            return self.cmp_rational(&x);
        }
        if let Some(x) = self.as_rational().cloned() {
            return other.cmp_rational(&x).reverse();
        }
        let g = self.poly.gcd(&other.poly);
        let shared = g.degree().unwrap_or(0) > 0;
        loop {
            if self.interval.hi < other.interval.lo {
                return Ordering::Less;
            }
            if other.interval.hi < self.interval.lo {
                return Ordering::Greater;
            }
            if shared {
                let lo = core::cmp::max(&self.interval.lo, &other.interval.lo).clone();
                let hi = core::cmp::min(&self.interval.hi, &other.interval.hi).clone();
                let sf = g.squarefree();
                let inside = SturmSequence::new(&sf).count(&lo, &hi) + usize::from(sf.eval(&lo).is_zero());
                if inside > 0 {
                    return Ordering::Equal;
                }
            }
            self.bisect();
            other.bisect();
            if let Some(x) = other.as_rational().cloned() {
                return self.cmp_rational(&x);
            }
            if let Some(x) = self.as_rational().cloned() {
                return other.cmp_rational(&x).reverse();
            }
        }
    }
}

/// Ratio of two polynomials in γ, kept reduced. The denominator is scaled
/// so that its constant term is 1 when that term is nonzero (always the case
/// for value functions, whose denominators do not vanish on [0, 1)), and is
/// monic otherwise.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RationalFunction {
    numerator: Polynomial,
    denominator: Polynomial,
}

impl RationalFunction {
    pub fn new(numerator: Polynomial, denominator: Polynomial) -> Self {
        assert!(!denominator.is_zero(), "zero denominator");
        if numerator.is_zero() {
            return RationalFunction { numerator, denominator: Polynomial::one() };
        }
        let g = numerator.gcd(&denominator);
        let (mut num, mut den) = if g.degree().unwrap_or(0) > 0 {
            (numerator.exact_div(&g), denominator.exact_div(&g))
        } else {
            (numerator, denominator)
        };
        let c0 = den.coeff(0);
        let k = if c0.is_zero() { BigRational::one() / den.leading() } else { BigRational::one() / c0 };
        num = num.scale(&k);
        den = den.scale(&k);
        RationalFunction { numerator: num, denominator: den }
    }

    pub fn from_polynomial(p: Polynomial) -> Self {
        RationalFunction::new(p, Polynomial::one())
    }

    pub fn zero() -> Self {
        RationalFunction::from_polynomial(Polynomial::zero())
    }

    pub fn numerator(&self) -> &Polynomial {
        &self.numerator
    }

    pub fn denominator(&self) -> &Polynomial {
        &self.denominator
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    /// `None` where the denominator vanishes.
    pub fn eval(&self, x: &BigRational) -> Option<BigRational> {
        let d = self.denominator.eval(x);
        (!d.is_zero()).then(|| self.numerator.eval(x) / d)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.numerator.eval_f64(x) / self.denominator.eval_f64(x)
    }
}

impl Add for &RationalFunction {
    type Output = RationalFunction;
    fn add(self, rhs: &RationalFunction) -> RationalFunction {
        let num = &(&self.numerator * &rhs.denominator) + &(&rhs.numerator * &self.denominator);
        RationalFunction::new(num, &self.denominator * &rhs.denominator)
    }
}

impl Sub for &RationalFunction {
    type Output = RationalFunction;
    fn sub(self, rhs: &RationalFunction) -> RationalFunction {
        let num = &(&self.numerator * &rhs.denominator) - &(&rhs.numerator * &self.denominator);
        RationalFunction::new(num, &self.denominator * &rhs.denominator)
    }
}

impl Mul for &RationalFunction {
    type Output = RationalFunction;
    fn mul(self, rhs: &RationalFunction) -> RationalFunction {
        RationalFunction::new(&self.numerator * &rhs.numerator, &self.denominator * &rhs.denominator)
    }
}
