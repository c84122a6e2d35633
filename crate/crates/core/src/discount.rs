//! Discount functions `g: ℕ → [0, 1)` and their convergence oracles.
//!
//! Oracle cost per variant, with `|g|` the encoding length and `d` the bit
//! size of δ: `Constant` is O(1) with T = 0; `DownStep` and `TwoPhase`
//! compare δ against the jump, O(|g| + d), with T ≤ step + 1 (exponential in
//! |g|); `GeometricApproach` evaluates a logarithm bound, O(poly(|g|, d)),
//! with T = O(d / log(1/r)); `FiniteTable` scans the table, O(|g|).

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::magnitude::{ceil_nonneg, Magnitude};
use crate::scalar::{format_rational, rational_to_f64, Scalar};

/// Largest `t` at which a geometric discount is evaluated exactly.
const GEOMETRIC_EXACT_LIMIT: u64 = 1 << 20;
/// Largest oracle answer found by exact scanning.
const GEOMETRIC_SCAN_LIMIT: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiscountFunction {
    Constant(BigRational),
    /// `gamma` for t ≤ step, 0 afterwards.
    DownStep { gamma: BigRational, step: BigUint },
    /// `first` for t ≤ step, `second` afterwards.
    TwoPhase { first: BigRational, second: BigRational, step: BigUint },
    /// `max(0, limit − amplitude · ratio^t)`.
    GeometricApproach { limit: BigRational, amplitude: BigRational, ratio: BigRational },
    /// `values[t]` for t < len, `tail` afterwards.
    FiniteTable { values: Vec<BigRational>, tail: BigRational },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Constant,
    DownStep,
    TwoPhase,
    GeometricApproach,
    FiniteTable,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Constant => "constant",
            Variant::DownStep => "down_step",
            Variant::TwoPhase => "two_phase",
            Variant::GeometricApproach => "geometric_approach",
            Variant::FiniteTable => "table",
        }
    }
}

/// `|g(t) − g(t_star)| ≤ delta` for every `t ≥ t_star`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvergenceCertificate {
    pub delta: Magnitude,
    pub t_star: BigUint,
    pub source: Variant,
}

fn in_unit(x: &BigRational) -> bool {
    !x.is_negative() && *x < BigRational::one()
}

fn check_unit(what: &str, x: &BigRational) -> Result<()> {
    if in_unit(x) {
        Ok(())
    } else {
        Err(Error::InvalidDiscount(format!("{what} = {} is outside [0, 1)", format_rational(x))))
    }
}

impl DiscountFunction {
    pub fn constant(gamma: BigRational) -> Result<Self> {
        let g = DiscountFunction::Constant(gamma);
        g.validate()?;
        Ok(g)
    }

    pub fn down_step(gamma: BigRational, step: BigUint) -> Result<Self> {
        let g = DiscountFunction::DownStep { gamma, step };
        g.validate()?;
        Ok(g)
    }

    pub fn two_phase(first: BigRational, second: BigRational, step: BigUint) -> Result<Self> {
        let g = DiscountFunction::TwoPhase { first, second, step };
        g.validate()?;
        Ok(g)
    }

    pub fn geometric(limit: BigRational, amplitude: BigRational, ratio: BigRational) -> Result<Self> {
        let g = DiscountFunction::GeometricApproach { limit, amplitude, ratio };
        g.validate()?;
        Ok(g)
    }

    pub fn table(values: Vec<BigRational>, tail: BigRational) -> Result<Self> {
        let g = DiscountFunction::FiniteTable { values, tail };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DiscountFunction::Constant(gamma) => check_unit("gamma", gamma),
            DiscountFunction::DownStep { gamma, .. } => check_unit("gamma", gamma),
            DiscountFunction::TwoPhase { first, second, .. } => {
                check_unit("first", first)?;
                check_unit("second", second)
            }
            DiscountFunction::GeometricApproach { limit, amplitude, ratio } => {
                check_unit("limit", limit)?;
                if !ratio.is_positive() || *ratio >= BigRational::one() {
                    return Err(Error::InvalidDiscount("ratio must lie in (0, 1)".into()));
                }
                // Approaching from above: g(0) = limit + |amplitude| must stay below 1.
                if amplitude.is_negative() && limit - amplitude >= BigRational::one() {
                    return Err(Error::InvalidDiscount("limit − amplitude must be below 1".into()));
                }
                Ok(())
            }
            DiscountFunction::FiniteTable { values, tail } => {
                for v in values {
                    check_unit("table entry", v)?;
                }
                check_unit("tail", tail)
            }
        }
    }

    pub fn variant(&self) -> Variant {
        match self {
            DiscountFunction::Constant(_) => Variant::Constant,
            DiscountFunction::DownStep { .. } => Variant::DownStep,
            DiscountFunction::TwoPhase { .. } => Variant::TwoPhase,
            DiscountFunction::GeometricApproach { .. } => Variant::GeometricApproach,
            DiscountFunction::FiniteTable { .. } => Variant::FiniteTable,
        }
    }

    /// g(t), exactly. Geometric discounts are only expanded up to t = 2²⁰.
    pub fn eval(&self, t: &BigUint) -> Result<BigRational> {
        Ok(match self {
            DiscountFunction::Constant(gamma) => gamma.clone(),
            DiscountFunction::DownStep { gamma, step } => {
                if t <= step {
                    gamma.clone()
                } else {
                    BigRational::zero()
                }
            }
            DiscountFunction::TwoPhase { first, second, step } => {
                if t <= step {
                    first.clone()
                } else {
                    second.clone()
                }
            }
            DiscountFunction::GeometricApproach { limit, amplitude, ratio } => {
                if amplitude.is_zero() {
                    return Ok(limit.clone());
                }
                let k = t
                    .to_u64()
                    .filter(|k| *k <= GEOMETRIC_EXACT_LIMIT)
                    .ok_or_else(|| Error::HorizonCap { requested: t.to_string(), cap: GEOMETRIC_EXACT_LIMIT as usize })?;
                let value = limit - amplitude * num_traits::pow(ratio.clone(), k as usize);
                if value.is_negative() {
                    BigRational::zero()
                } else {
                    value
                }
            }
            DiscountFunction::FiniteTable { values, tail } => match t.to_usize() {
                Some(i) if i < values.len() => values[i].clone(),
                _ => tail.clone(),
            },
        })
    }

    pub fn eval_at(&self, t: usize) -> Result<BigRational> {
        self.eval(&BigUint::from(t))
    }

    /// g(t) in the scalar type `S`.
    pub fn eval_scalar<S: Scalar>(&self, t: usize) -> Result<S> {
        if !S::EXACT {
            if let DiscountFunction::GeometricApproach { limit, amplitude, ratio } = self {
                let v = S::from_exact(limit).approx_f64()
                    - S::from_exact(amplitude).approx_f64() * libm::pow(S::from_exact(ratio).approx_f64(), t as f64);
                return Ok(S::from_f64(v.max(0.0)));
            }
        }
        Ok(S::from_exact(&self.eval_at(t)?))
    }

    pub fn limit(&self) -> BigRational {
        match self {
            DiscountFunction::Constant(gamma) => gamma.clone(),
            DiscountFunction::DownStep { .. } => BigRational::zero(),
            DiscountFunction::TwoPhase { second, .. } => second.clone(),
            DiscountFunction::GeometricApproach { limit, .. } => limit.clone(),
            DiscountFunction::FiniteTable { tail, .. } => tail.clone(),
        }
    }

    /// Largest value g ever takes.
    pub fn supremum(&self) -> BigRational {
        match self {
            DiscountFunction::Constant(gamma) | DiscountFunction::DownStep { gamma, .. } => gamma.clone(),
            DiscountFunction::TwoPhase { first, second, .. } => first.max(second).clone(),
            DiscountFunction::GeometricApproach { limit, amplitude, .. } => {
                if amplitude.is_negative() {
                    limit - amplitude
                } else {
                    limit.clone()
                }
            }
            DiscountFunction::FiniteTable { values, tail } => values.iter().fold(tail.clone(), |m, v| m.max(v.clone())),
        }
    }

    /// A step T with |g(t) − g(T)| ≤ δ for all t ≥ T.
    pub fn convergence_oracle(&self, delta: &Magnitude) -> ConvergenceCertificate {
        let t_star = match self {
            DiscountFunction::Constant(_) => BigUint::zero(),
            DiscountFunction::DownStep { gamma, step } => jump_oracle(gamma.clone(), step, delta),
            DiscountFunction::TwoPhase { first, second, step } => jump_oracle((first - second).abs(), step, delta),
            DiscountFunction::GeometricApproach { amplitude, ratio, .. } => geometric_oracle(amplitude, ratio, delta),
            DiscountFunction::FiniteTable { values, tail } => table_oracle(values, tail, delta),
        };
        ConvergenceCertificate { delta: delta.clone(), t_star, source: self.variant() }
    }

    /// Oracle for a rational δ > 0.
    pub fn oracle_rational(&self, delta: &BigRational) -> Result<ConvergenceCertificate> {
        if !delta.is_positive() {
            return Err(Error::InvalidParameter("delta must be positive".into()));
        }
        Ok(self.convergence_oracle(&Magnitude::from_rational(delta.clone())))
    }
}

fn jump_oracle(jump: BigRational, step: &BigUint, delta: &Magnitude) -> BigUint {
    if jump.is_zero() || Magnitude::from_rational(jump) <= *delta {
        BigUint::zero()
    } else {
        step + 1u32
    }
}

/// Smallest T with 2|a₀| rᵀ ≤ δ when that T is small; otherwise a
/// conservative T from a lower bound on log₂(1/r).
fn geometric_oracle(amplitude: &BigRational, ratio: &BigRational, delta: &Magnitude) -> BigUint {
    if amplitude.is_zero() {
        return BigUint::zero();
    }
    let two_a = amplitude.abs() * BigRational::from_integer(BigInt::from(2));
    if let Some(d) = delta.to_rational() {
        // Float guess, then exact correction in both directions.
        let fits = |t: u64| two_a.clone() * num_traits::pow(ratio.clone(), t as usize) <= d;
        let guess = libm::log2(rational_to_f64(&(&two_a / &d))) / libm::log2(1.0 / rational_to_f64(ratio));
        if guess.is_finite() && guess <= GEOMETRIC_SCAN_LIMIT as f64 {
            let mut t = libm::ceil(guess.max(0.0)) as u64;
            while t > 0 && fits(t - 1) {
                t -= 1;
            }
            while t <= GEOMETRIC_SCAN_LIMIT && !fits(t) {
                t += 1;
            }
            if t <= GEOMETRIC_SCAN_LIMIT {
                return BigUint::from(t);
            }
        }
    }
    // T ≥ (log₂(2|a₀|) − log₂ δ) / log₂(1/r). Over-estimate the numerator and
    // under-estimate the denominator.
    let numer = BigInt::from(crate::magnitude::floor_log2_rational(&two_a) + 1) - delta.floor_log2();
    let inv = BigRational::one() / ratio;
    let lower = log2_lower_bound(&inv);
    if !numer.is_positive() {
        return BigUint::zero();
    }
    ceil_nonneg(&(BigRational::from_integer(numer) / lower))
}

/// A positive rational not exceeding log₂ x, for x > 1.
fn log2_lower_bound(x: &BigRational) -> BigRational {
    let approx = libm::log2(rational_to_f64(x));
    let shaved = approx * (1.0 - 1e-9);
    if shaved.is_finite() && shaved > 0.0 {
        BigRational::from_float(shaved).unwrap_or_else(|| fallback_log2(x))
    } else {
        fallback_log2(x)
    }
}

/// log₂ x ≥ ln x ≥ (x − 1)/x.
fn fallback_log2(x: &BigRational) -> BigRational {
    (x - BigRational::one()) / x
}

fn table_oracle(values: &[BigRational], tail: &BigRational, delta: &Magnitude) -> BigUint {
    let n = values.len();
    let mut suffix_min = tail.clone();
    let mut suffix_max = tail.clone();
    let mut ok = alloc::vec![false; n];
    for t in (0..n).rev() {
        if values[t] < suffix_min {
            suffix_min = values[t].clone();
        }
        if values[t] > suffix_max {
            suffix_max = values[t].clone();
        }
        let spread = (&suffix_max - &values[t]).max(&values[t] - &suffix_min);
        ok[t] = spread.is_zero() || Magnitude::from_rational(spread) <= *delta;
    }
    BigUint::from(ok.iter().position(|&b| b).unwrap_or(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;
    use alloc::vec;
    use proptest::prelude::*;

    fn big(t: u64) -> BigUint {
        BigUint::from(t)
    }

    #[test]
    fn evaluation_examples() {
        let down = DiscountFunction::down_step(ratio(1, 2), big(3)).unwrap();
        assert_eq!(down.eval(&big(3)).unwrap(), ratio(1, 2));
        assert_eq!(down.eval(&big(4)).unwrap(), ratio(0, 1));
        let c = DiscountFunction::constant(ratio(3, 4)).unwrap();
        assert_eq!(c.eval(&(BigUint::one() << 100usize)).unwrap(), ratio(3, 4));
        let geo = DiscountFunction::geometric(ratio(9, 10), ratio(1, 2), ratio(1, 2)).unwrap();
        assert_eq!(geo.eval(&big(0)).unwrap(), ratio(2, 5));
        assert_eq!(geo.eval(&big(2)).unwrap(), ratio(31, 40));
        assert!((geo.eval_scalar::<f64>(2).unwrap() - 0.775).abs() < 1e-15);
    }

    #[test]
    fn limits() {
        let huge = DiscountFunction::down_step(ratio(1, 2), big(1_000_000_000)).unwrap();
        assert_eq!(huge.limit(), ratio(0, 1));
        assert_eq!(DiscountFunction::constant(ratio(3, 10)).unwrap().limit(), ratio(3, 10));
        let geo = DiscountFunction::geometric(ratio(9, 10), ratio(1, 2), ratio(1, 2)).unwrap();
        assert_eq!(geo.limit(), ratio(9, 10));
    }

    #[test]
    fn down_step_oracle() {
        let down = DiscountFunction::down_step(ratio(1, 2), big(5)).unwrap();
        assert_eq!(down.oracle_rational(&ratio(1, 10)).unwrap().t_star, big(6));
        assert_eq!(down.oracle_rational(&ratio(6, 10)).unwrap().t_star, big(0));
        assert_eq!(down.oracle_rational(&ratio(1, 2)).unwrap().t_star, big(0));
        let c = DiscountFunction::constant(ratio(1, 3)).unwrap();
        assert_eq!(c.oracle_rational(&ratio(1, 1000)).unwrap().t_star, big(0));
        assert!(c.oracle_rational(&ratio(0, 1)).is_err());
    }

    #[test]
    fn geometric_oracle_matches_log_formula() {
        let geo = DiscountFunction::geometric(ratio(4, 5), ratio(1, 5), ratio(1, 2)).unwrap();
        // 2 · 0.2 · 0.5^T ≤ 0.01  ⇔  T ≥ log2(40) ≈ 5.32
        assert_eq!(geo.oracle_rational(&ratio(1, 100)).unwrap().t_star, big(6));
        let tiny = Magnitude::pow2(-(BigInt::one() << 40usize));
        let t = geo.convergence_oracle(&tiny).t_star;
        // About 2^40 steps; never below the exact requirement.
        assert!(t >= (BigUint::one() << 40usize));
        assert!(t <= (BigUint::one() << 41usize));
    }

    #[test]
    fn table_oracle_scans() {
        let table = DiscountFunction::table(vec![ratio(1, 10), ratio(9, 10), ratio(1, 2)], ratio(1, 2)).unwrap();
        assert_eq!(table.oracle_rational(&ratio(1, 100)).unwrap().t_star, big(2));
        assert_eq!(table.oracle_rational(&ratio(2, 5)).unwrap().t_star, big(1));
        assert_eq!(table.oracle_rational(&ratio(4, 5)).unwrap().t_star, big(0));
    }

    #[test]
    fn validation() {
        assert!(DiscountFunction::constant(ratio(1, 1)).is_err());
        assert!(DiscountFunction::geometric(ratio(1, 2), ratio(1, 4), ratio(1, 1)).is_err());
        assert!(DiscountFunction::geometric(ratio(9, 10), ratio(-1, 5), ratio(1, 2)).is_err());
        assert!(DiscountFunction::geometric(ratio(1, 2), ratio(-1, 5), ratio(1, 2)).is_ok());
        assert!(DiscountFunction::table(vec![ratio(-1, 2)], ratio(0, 1)).is_err());
    }

    fn arb_discount() -> impl Strategy<Value = DiscountFunction> {
        let r = |lo: i64, hi: i64| (lo..hi).prop_map(|k| ratio(k, 100));
        prop_oneof![
            r(0, 100).prop_map(|g| DiscountFunction::Constant(g)),
            (r(0, 100), 0u64..30).prop_map(|(g, s)| DiscountFunction::DownStep { gamma: g, step: BigUint::from(s) }),
            (r(0, 100), r(0, 100), 0u64..30)
                .prop_map(|(a, b, s)| DiscountFunction::TwoPhase { first: a, second: b, step: BigUint::from(s) }),
            (r(0, 100), r(1, 100), r(1, 100)).prop_map(|(l, a, q)| DiscountFunction::GeometricApproach {
                limit: l,
                amplitude: a,
                ratio: q
            }),
            (proptest::collection::vec(r(0, 100), 0..12), r(0, 100))
                .prop_map(|(v, t)| DiscountFunction::FiniteTable { values: v, tail: t }),
        ]
    }

    proptest! {
        #[test]
        fn certificates_are_sound(g in arb_discount(), d in 1i64..500, far in 2000u64..5000) {
            let delta = ratio(d, 1000);
            let cert = g.oracle_rational(&delta).unwrap();
            let t = cert.t_star.to_u64().unwrap();
            let base = g.eval(&cert.t_star).unwrap();
            for k in (t..t + 64).chain(core::iter::once(t + far)) {
                let v = g.eval(&BigUint::from(k)).unwrap();
                prop_assert!((v - &base).abs() <= delta);
            }
            prop_assert!((g.limit() - &base).abs() <= delta);
            prop_assert!(in_unit(&base));
        }

        #[test]
        fn oracle_is_minimal_for_step_families(g in arb_discount(), d in 1i64..500) {
            prop_assume!(!matches!(g, DiscountFunction::GeometricApproach { .. }));
            let delta = ratio(d, 1000);
            let t = g.oracle_rational(&delta).unwrap().t_star.to_u64().unwrap();
            if t > 0 {
                let prev = g.eval(&BigUint::from(t - 1)).unwrap();
                let violated = (t - 1..t + 40).any(|k| (g.eval(&BigUint::from(k)).unwrap() - &prev).abs() > delta);
                prop_assert!(violated);
            }
        }

        #[test]
        fn oracle_monotone_in_delta(g in arb_discount(), a in 1i64..500, b in 1i64..500) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let t_lo = g.oracle_rational(&ratio(lo, 1000)).unwrap().t_star;
            let t_hi = g.oracle_rational(&ratio(hi, 1000)).unwrap().t_star;
            prop_assert!(t_lo >= t_hi);
        }
    }
}
