//! Value functions as exact rational functions of γ, the degenerate set Γ
//! of discount factors with several non-equivalent optimal policies, and
//! the root-separation bound.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::magnitude::{floor_log2_rational, Magnitude};
use crate::mdp::{Mdp, StaticPolicy};
use crate::poly::{AlgebraicNumber, Polynomial, RationalFunction};
use crate::settings::Settings;

/// V^π(s) for every state, as rational functions of γ.
///
/// `numerators[s] / denominator` is the unreduced Cramer form with
/// `denominator(0) = 1`, so the denominator is positive on [0, 1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyValues {
    numerators: Vec<Polynomial>,
    denominator: Polynomial,
    reduced: Vec<RationalFunction>,
}

impl PolicyValues {
    pub fn get(&self, s: usize) -> &RationalFunction {
        &self.reduced[s]
    }

    pub fn values(&self) -> &[RationalFunction] {
        &self.reduced
    }

    pub fn same_values(&self, other: &PolicyValues) -> bool {
        self.reduced == other.reduced
    }

    /// Numerator of Q(s, a) − V(s) over the positive common denominator:
    /// R(s,a)·d + γ Σ P(s,a,s') x_{s'} − x_s.
    pub fn advantage_numerator(&self, mdp: &Mdp, s: usize, a: usize) -> Polynomial {
        let action = mdp.action(s, a);
        let mut expected = Polynomial::zero();
        for (t, p) in action.transition.iter().enumerate() {
            if !p.is_zero() {
                expected = &expected + &self.numerators[t].scale(p);
            }
        }
        let shifted = &Polynomial::variable() * &expected;
        &(&self.denominator.scale(&action.reward) + &shifted) - &self.numerators[s]
    }
}

/// Solves (I − γ P_π) V = r_π over Q[γ] by fraction-free elimination.
pub fn policy_values(mdp: &Mdp, policy: &StaticPolicy) -> PolicyValues {
    let n = mdp.n_states();
    let mut a: Vec<Vec<Polynomial>> = (0..n)
        .map(|i| {
            let row = &mdp.action(i, policy.choice(i)).transition;
            (0..n)
                .map(|j| {
                    let diag = if i == j { BigRational::one() } else { BigRational::zero() };
                    Polynomial::new(vec![diag, -row[j].clone()])
                })
                .collect()
        })
        .collect();
    let mut b: Vec<Polynomial> =
        (0..n).map(|i| Polynomial::constant(mdp.action(i, policy.choice(i)).reward.clone())).collect();
    let mut prev = Polynomial::one();
    for k in 0..n {
        let pivot = (k..n).find(|&r| !a[r][k].is_zero()).expect("I − γP is nonsingular over Q(γ)");
        a.swap(k, pivot);
        b.swap(k, pivot);
        for i in k + 1..n {
            let lead = a[i][k].clone();
            for j in k + 1..n {
                let v = &(&a[k][k] * &a[i][j]) - &(&lead * &a[k][j]);
                a[i][j] = v.exact_div(&prev);
            }
            let v = &(&a[k][k] * &b[i]) - &(&lead * &b[k]);
            b[i] = v.exact_div(&prev);
            a[i][k] = Polynomial::zero();
        }
        prev = a[k][k].clone();
    }
    let mut det = prev;
    let mut x = vec![Polynomial::zero(); n];
    for i in (0..n).rev() {
        let mut acc = &det * &b[i];
        for j in i + 1..n {
            acc = &acc - &(&a[i][j] * &x[j]);
        }
        x[i] = acc.exact_div(&a[i][i]);
    }
    if det.coeff(0).is_negative() {
        det = -&det;
        for xi in &mut x {
            *xi = -&*xi;
        }
    }
    let reduced = x.iter().map(|xi| RationalFunction::new(xi.clone(), det.clone())).collect();
    PolicyValues { numerators: x, denominator: det, reduced }
}

fn check_policy(mdp: &Mdp, policy: &StaticPolicy) -> Result<()> {
    if policy.is_valid_for(mdp) {
        Ok(())
    } else {
        Err(Error::InvalidPolicy("policy does not match the model".into()))
    }
}

/// V^π_γ(state) as a reduced rational function of γ.
pub fn value_rational(mdp: &Mdp, policy: &StaticPolicy, state: usize) -> Result<RationalFunction> {
    check_policy(mdp, policy)?;
    if state >= mdp.n_states() {
        return Err(Error::InvalidParameter(format!("state index {state} out of range")));
    }
    Ok(policy_values(mdp, policy).reduced.swap_remove(state))
}

/// h(γ) = V^{p1}_γ(state) − V^{p2}_γ(state).
pub fn h_function(mdp: &Mdp, p1: &StaticPolicy, p2: &StaticPolicy, state: usize) -> Result<RationalFunction> {
    check_policy(mdp, p2)?;
    let v1 = value_rational(mdp, p1, state)?;
    let v2 = value_rational(mdp, p2, state)?;
    Ok(&v1 - &v2)
}

/// One degenerate discount factor with two non-equivalent policies that are
/// both optimal there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GammaPoint {
    pub number: AlgebraicNumber,
    pub witnesses: (StaticPolicy, StaticPolicy),
}

impl GammaPoint {
    pub fn lo(&self) -> &BigRational {
        self.number.lo()
    }

    pub fn hi(&self) -> &BigRational {
        self.number.hi()
    }

    pub fn polynomial(&self) -> &Polynomial {
        self.number.poly()
    }

    pub fn approx(&self) -> f64 {
        self.number.approx()
    }
}

/// Where a rational discount sits relative to Γ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Location {
    /// Equal to the indexed point of Γ.
    OnPoint(usize),
    /// Strictly between points; each side carries a rational lower bound on
    /// the distance to the nearest point on that side.
    Between { below: Option<(usize, BigRational)>, above: Option<(usize, BigRational)> },
}

impl Location {
    /// Lower bound on the distance to Γ, `None` when Γ is empty.
    pub fn clearance(&self) -> Option<BigRational> {
        match self {
            Location::OnPoint(_) => Some(BigRational::zero()),
            Location::Between { below, above } => match (below, above) {
                (Some((_, a)), Some((_, b))) => Some(a.clone().min(b.clone())),
                (Some((_, a)), None) | (None, Some((_, a))) => Some(a.clone()),
                (None, None) => None,
            },
        }
    }
}

/// Γ as a sorted list of disjoint isolating intervals inside [0, 1).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GammaSet {
    points: Vec<GammaPoint>,
    classes: usize,
}

impl GammaSet {
    pub fn points(&self) -> &[GammaPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of equivalence classes among all static policies.
    pub fn class_count(&self) -> usize {
        self.classes
    }

    /// Shrinks every interval to width ≤ `width`.
    pub fn refine(&mut self, width: &BigRational) {
        for p in &mut self.points {
            p.number.refine_to(width);
        }
    }

    pub fn locate(&self, x: &BigRational) -> Location {
        let mut below = None;
        let mut above = None;
        for (i, p) in self.points.iter().enumerate() {
            let mut alpha = p.number.clone();
            match alpha.cmp_rational(x) {
                Ordering::Equal => return Location::OnPoint(i),
                Ordering::Less => below = Some((i, x - alpha.hi())),
                Ordering::Greater => {
                    above = Some((i, alpha.lo() - x));
                    break;
                }
            }
        }
        Location::Between { below, above }
    }

    /// Rational lower bound on the smallest distance between two elements of
    /// Γ ∪ {0, 1}.
    pub fn min_gap(&self) -> BigRational {
        let zero = BigRational::zero();
        let mut pts: Vec<AlgebraicNumber> = Vec::with_capacity(self.points.len() + 2);
        let starts_at_zero = self.points.first().is_some_and(|p| p.number.as_rational() == Some(&zero));
        if !starts_at_zero {
            pts.push(AlgebraicNumber::rational(zero));
        }
        pts.extend(self.points.iter().map(|p| p.number.clone()));
        pts.push(AlgebraicNumber::rational(BigRational::one()));
        loop {
            let gaps: Vec<BigRational> = pts.windows(2).map(|w| w[1].lo() - w[0].hi()).collect();
            let mut settled = true;
            for i in 0..pts.len() {
                let left = if i > 0 { Some(&gaps[i - 1]) } else { None };
                let right = gaps.get(i);
                let near = match (left, right) {
                    (Some(a), Some(b)) => a.min(b).clone(),
                    (Some(a), None) | (None, Some(a)) => a.clone(),
                    (None, None) => continue,
                };
                let width = pts[i].hi() - pts[i].lo();
                if !near.is_positive() || width * BigRational::from_integer(BigInt::from(4)) > near {
                    pts[i].bisect();
                    settled = false;
                }
            }
            if settled {
                return gaps.into_iter().min().unwrap_or_else(BigRational::one);
            }
        }
    }
}

/// Computes Γ exactly by enumerating all static policies.
///
/// Policies are grouped into equivalence classes. For each class the
/// advantage numerators of all single-state switches are formed; a root α
/// of one of them is in Γ exactly when every advantage of the class is
/// ≤ 0 at α (the class is optimal there) and the switch is not equivalent.
pub fn compute_gamma_set(mdp: &Mdp, settings: &Settings) -> Result<GammaSet> {
    let policies = StaticPolicy::enumerate(mdp, settings.enumeration_cap)?;
    let mut classes: BTreeMap<Vec<RationalFunction>, (StaticPolicy, PolicyValues)> = BTreeMap::new();
    for p in policies {
        let values = policy_values(mdp, &p);
        classes.entry(values.reduced.clone()).or_insert((p, values));
    }
    let zero = BigRational::zero();
    let one = BigRational::one();
    let mut found: Vec<GammaPoint> = Vec::new();
    if classes.len() > 1 {
        for (policy, values) in classes.values() {
            let mut advantages = Vec::new();
            for s in 0..mdp.n_states() {
                for a in 0..mdp.actions(s).len() {
                    if a == policy.choice(s) {
                        continue;
                    }
                    let adv = values.advantage_numerator(mdp, s, a);
                    if !adv.is_zero() {
                        advantages.push((s, a, adv));
                    }
                }
            }
            for (s, a, adv) in &advantages {
                let sf = adv.squarefree();
                for interval in adv.isolate_roots(&zero, &one) {
                    let mut alpha = AlgebraicNumber::new(sf.clone(), interval);
                    if contains(&mut found, &mut alpha) {
                        continue;
                    }
                    let optimal =
                        advantages.iter().all(|(_, _, other)| alpha.sign_of(other) != Ordering::Greater);
                    if optimal {
                        insert_sorted(
                            &mut found,
                            GammaPoint { number: alpha, witnesses: (policy.clone(), policy.with_choice(*s, *a)) },
                        );
                    }
                }
            }
        }
    }
    separate(&mut found);
    Ok(GammaSet { points: found, classes: classes.len() })
}

fn contains(points: &mut [GammaPoint], alpha: &mut AlgebraicNumber) -> bool {
    points.iter_mut().any(|p| p.number.cmp_refining(alpha) == Ordering::Equal)
}

fn insert_sorted(points: &mut Vec<GammaPoint>, mut point: GammaPoint) {
    let mut at = points.len();
    for (i, p) in points.iter_mut().enumerate() {
        if point.number.cmp_refining(&mut p.number) == Ordering::Less {
            at = i;
            break;
        }
    }
    points.insert(at, point);
}

/// Refines neighbours until consecutive intervals are disjoint.
fn separate(points: &mut [GammaPoint]) {
    for i in 1..points.len() {
        let (left, right) = points.split_at_mut(i);
        let a = &mut left[i - 1].number;
        let b = &mut right[0].number;
        while a.hi() >= b.lo() {
            a.bisect();
            b.bisect();
        }
    }
}

/// D = (n·m)^(−b·(n·m)^(n⁵)), held as bounds on log₂ D.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparationBound {
    pub n: u64,
    pub m: u64,
    pub b: u64,
    /// b·(n·m)^(n⁵).
    pub exponent: BigUint,
    /// log₂ D ≥ `log2_lower` (so 2^log2_lower is a safe stand-in for D).
    pub log2_lower: BigInt,
    /// log₂ D ≤ `log2_upper`.
    pub log2_upper: BigInt,
    /// True when n·m is a power of two, so both bounds equal log₂ D.
    pub exact: bool,
    /// The formula is only claimed for large enough instances.
    pub heuristic: bool,
}

/// Largest exponent bit length the bound is expanded for.
const SEPARATION_BITS_LIMIT: f64 = (1u64 << 26) as f64;

pub fn separation_bound(n: u64, m: u64, b: u64) -> Result<SeparationBound> {
    if n == 0 || m == 0 || b == 0 {
        return Err(Error::InvalidParameter("n, m and b must be at least 1".into()));
    }
    let nm = BigUint::from(n) * BigUint::from(m);
    let n5 = n.checked_pow(5).ok_or_else(|| Error::SeparationTooSmall(format!("n = {n} is too large")))?;
    let bits_estimate = n5 as f64 * libm::log2(nm.to_f64().unwrap_or(f64::MAX)) + libm::log2(b as f64);
    if bits_estimate > SEPARATION_BITS_LIMIT {
        return Err(Error::SeparationTooSmall(format!(
            "log2(1/D) has about 2^{:.1} bits for n = {n}, m = {m}, b = {b}",
            libm::log2(bits_estimate)
        )));
    }
    let exponent = BigUint::from(b) * num_traits::pow(nm.clone(), n5 as usize);
    let exponent_int = BigInt::from(exponent.clone());
    let k = nm.bits() - 1;
    let exact = nm == BigUint::one() << k as usize;
    let (log2_lower, log2_upper) = if exact {
        let v = -(&exponent_int * BigInt::from(k));
        (v.clone(), v)
    } else {
        let approx = libm::log2(nm.to_f64().unwrap_or(f64::MAX));
        let eps = BigRational::new(BigInt::one(), BigInt::one() << 40usize);
        let centre = BigRational::from_float(approx).unwrap_or_else(|| BigRational::from_integer(BigInt::from(k)));
        let floor = BigRational::from_integer(BigInt::from(k));
        let ceil = BigRational::from_integer(BigInt::from(k + 1));
        let lo = (&centre - &eps).max(floor);
        let hi = (&centre + &eps).min(ceil);
        let e = BigRational::from_integer(exponent_int.clone());
        ((-(&e * hi)).floor().to_integer(), (-(&e * lo)).ceil().to_integer())
    };
    Ok(SeparationBound { n, m, b, exponent, log2_lower, log2_upper, exact, heuristic: n < 3 })
}

impl SeparationBound {
    pub fn for_mdp(mdp: &Mdp) -> Result<Self> {
        separation_bound(mdp.n_states() as u64, mdp.action_union_size() as u64, mdp.bit_size())
    }

    /// log₂ D when it is an integer known exactly.
    pub fn log2_exact(&self) -> Option<&BigInt> {
        self.exact.then_some(&self.log2_lower)
    }

    /// A value certified not to exceed D.
    pub fn lower_magnitude(&self) -> Magnitude {
        Magnitude::pow2(self.log2_lower.clone())
    }

    /// True when x ≥ D is certified by comparing logarithms.
    pub fn is_below(&self, x: &BigRational) -> bool {
        x.is_positive() && BigInt::from(floor_log2_rational(x)) >= self.log2_upper
    }
}
