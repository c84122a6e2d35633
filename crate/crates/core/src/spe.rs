//! Subgame-perfect equilibria of the intra-personal game: backward
//! induction against a fixed tail, exact SPEs through Γ, and ε-SPEs through
//! convergence oracles.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::discount::DiscountFunction;
use crate::error::{Error, Result};
use crate::gamma::{self, GammaSet, Location, SeparationBound};
use crate::magnitude::Magnitude;
use crate::mdp::{argmax_first, optimal_policy, Mdp, StaticPolicy};
use crate::scalar::{format_rational, Scalar};
use crate::settings::Settings;

/// π_t = prefix[t] for t < switch time, π_t = tail afterwards.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DynamicPolicy {
    prefix: Vec<StaticPolicy>,
    tail: StaticPolicy,
}

impl DynamicPolicy {
    pub fn new(mdp: &Mdp, prefix: Vec<StaticPolicy>, tail: StaticPolicy) -> Result<Self> {
        if !tail.is_valid_for(mdp) || prefix.iter().any(|p| !p.is_valid_for(mdp)) {
            return Err(Error::InvalidPolicy("dynamic policy does not match the model".into()));
        }
        Ok(DynamicPolicy { prefix, tail })
    }

    /// The static policy played at every step.
    pub fn stationary(tail: StaticPolicy) -> Self {
        DynamicPolicy { prefix: Vec::new(), tail }
    }

    pub fn prefix(&self) -> &[StaticPolicy] {
        &self.prefix
    }

    pub fn tail(&self) -> &StaticPolicy {
        &self.tail
    }

    pub fn switch_time(&self) -> usize {
        self.prefix.len()
    }

    pub fn at(&self, t: usize) -> &StaticPolicy {
        self.prefix.get(t).unwrap_or(&self.tail)
    }

    pub fn with_player(&self, t: usize, policy: StaticPolicy) -> Self {
        let mut next = self.clone();
        if t < next.prefix.len() {
            next.prefix[t] = policy;
        } else {
            while next.prefix.len() < t {
                next.prefix.push(next.tail.clone());
            }
            next.prefix.push(policy);
        }
        next
    }
}

/// Result of backward induction with the number of Q-value updates spent.
#[derive(Debug, Clone)]
pub struct Construction {
    pub policy: DynamicPolicy,
    pub inner_updates: u64,
}

pub(crate) fn horizon_usize(t: &BigUint, settings: &Settings) -> Result<usize> {
    t.to_usize()
        .filter(|t| *t <= settings.horizon_cap)
        .ok_or_else(|| Error::HorizonCap { requested: t.to_string(), cap: settings.horizon_cap })
}

/// Builds π_{T−1}, …, π_0 by backward induction against `tail`.
///
/// Player t evaluates with its own discount g(t): starting from V^tail at
/// g(t), it backs up through the later players' choices
/// V_i(s) = Q_i(s, π_i(s)) for i = T−1 … t+1 and then maximizes Q_t(s, ·).
pub fn construct_with_tail<S: Scalar>(
    mdp: &Mdp,
    g: &DiscountFunction,
    tail: &StaticPolicy,
    t_switch: &BigUint,
    settings: &Settings,
) -> Result<Construction> {
    if !tail.is_valid_for(mdp) {
        return Err(Error::InvalidPolicy("tail does not match the model".into()));
    }
    let horizon = horizon_usize(t_switch, settings)?;
    let model = mdp.lift::<S>();
    let tol = S::tie_tolerance(settings.tie_tolerance);
    let n = mdp.n_states();
    let mut prefix: Vec<StaticPolicy> = Vec::with_capacity(horizon);
    let mut updates = 0u64;
    // Built back to front; prefix[k] holds π_{T−1−k} until the final reverse.
    for t in (0..horizon).rev() {
        let gamma: S = g.eval_scalar(t)?;
        let mut values = model.evaluate(tail, &gamma)?;
        for i in (t..horizon).rev() {
            let q = model.q_table(&gamma, &values);
            updates += mdp.total_actions() as u64;
            if i > t {
                let later = &prefix[horizon - 1 - i];
                values = (0..n).map(|s| q[s][later.choice(s)].clone()).collect();
            } else {
                let choices = (0..n).map(|s| argmax_first(&q[s], &tol)).collect();
                prefix.push(StaticPolicy::new(mdp, choices)?);
            }
        }
    }
    prefix.reverse();
    Ok(Construction { policy: DynamicPolicy { prefix, tail: tail.clone() }, inner_updates: updates })
}

/// Exact SPE: the tail is optimal at g(T), where T is late enough that every
/// later discount stays in the Γ-free interval around lim g.
pub fn compute_exact_spe<S: Scalar>(
    mdp: &Mdp,
    g: &DiscountFunction,
    gamma_set: &GammaSet,
    settings: &Settings,
) -> Result<DynamicPolicy> {
    let limit = g.limit();
    let location = gamma_set.locate(&limit);
    let t_switch = match &location {
        Location::OnPoint(i) => {
            let p = &gamma_set.points()[*i];
            return Err(Error::DegenerateLimit {
                limit: format_rational(&limit),
                near: format!("[{}, {}]", format_rational(p.lo()), format_rational(p.hi())),
            });
        }
        Location::Between { .. } => match location.clearance() {
            None => BigUint::zero(),
            // |g(t) − lim g| ≤ 2δ = clearance/2 for t ≥ T.
            Some(clearance) => {
                let delta = clearance / BigRational::from_integer(4.into());
                g.oracle_rational(&delta)?.t_star
            }
        },
    };
    let gamma_t: S = g.eval_scalar(horizon_usize(&t_switch, settings)?)?;
    let (tail, _) = optimal_policy(mdp, &gamma_t, settings)?;
    Ok(construct_with_tail::<S>(mdp, g, &tail, &t_switch, settings)?.policy)
}

fn eps_constants(mdp: &Mdp, eps: &BigRational) -> Result<BigRational> {
    if !eps.is_positive() {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    // 4·M·|S|; zero when all rewards vanish.
    Ok(mdp.reward_bound() * BigRational::from_integer((4 * mdp.n_states()).into()))
}

/// ε-SPE with D = c⁴·min{ε/(4M|S|), c}, T = oracle(D), tail optimal at g(T).
pub fn compute_eps_spe<S: Scalar>(
    mdp: &Mdp,
    g: &DiscountFunction,
    eps: &BigRational,
    c: &BigRational,
    settings: &Settings,
) -> Result<DynamicPolicy> {
    let scale = eps_constants(mdp, eps)?;
    if !c.is_positive() || *c > BigRational::one() {
        return Err(Error::InvalidParameter("c must lie in (0, 1]".into()));
    }
    if g.limit() >= BigRational::one() - c {
        return Err(Error::InvalidParameter(format!(
            "limit {} is not below 1 − c = {}",
            format_rational(&g.limit()),
            format_rational(&(BigRational::one() - c))
        )));
    }
    let inner = if scale.is_zero() { c.clone() } else { (eps / &scale).min(c.clone()) };
    let d = num_traits::pow(c.clone(), 4) * inner;
    let t_switch = g.oracle_rational(&d)?.t_star;
    let gamma_t: S = g.eval_scalar(horizon_usize(&t_switch, settings)?)?;
    let (tail, _) = optimal_policy(mdp, &gamma_t, settings)?;
    Ok(construct_with_tail::<S>(mdp, g, &tail, &t_switch, settings)?.policy)
}

/// Where the separation D used by [`compute_eps_spe_unknown_gap`] came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SeparationSource {
    Supplied,
    ExactGap,
    Theoretical(SeparationBound),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// g(T) is within D/2 of 1, above every degenerate point.
    Exact,
    Epsilon,
}

#[derive(Debug, Clone)]
pub struct UnknownGapRun {
    pub policy: DynamicPolicy,
    pub separation: Magnitude,
    pub source: SeparationSource,
    pub branch: Branch,
    pub t_first: BigUint,
    pub t_second: Option<BigUint>,
}

/// ε-SPE without a known distance from lim g to Γ; the tail discount is
/// chosen relative to the separation D between points of Γ ∪ {0, 1}.
pub fn compute_eps_spe_unknown_gap<S: Scalar>(
    mdp: &Mdp,
    g: &DiscountFunction,
    eps: &BigRational,
    separation: Option<Magnitude>,
    settings: &Settings,
) -> Result<UnknownGapRun> {
    let scale = eps_constants(mdp, eps)?;
    let (d, source) = match separation {
        Some(d) => (d, SeparationSource::Supplied),
        None => match gamma::compute_gamma_set(mdp, settings) {
            Ok(gs) => (Magnitude::from_rational(gs.min_gap()), SeparationSource::ExactGap),
            Err(Error::EnumerationCap { .. }) => {
                let bound = SeparationBound::for_mdp(mdp)?;
                (bound.lower_magnitude(), SeparationSource::Theoretical(bound))
            }
            Err(e) => return Err(e),
        },
    };
    let theoretical = matches!(source, SeparationSource::Theoretical(_));
    let explain = |e: Error| match e {
        Error::HorizonCap { requested, cap } if theoretical => Error::SeparationTooSmall(format!(
            "D = 2^({}) forces switch time {requested} beyond the cap {cap}",
            d.floor_log2()
        )),
        other => other,
    };
    let quarter = d.div_rational(&BigRational::from_integer(4.into()));
    let t_first = g.convergence_oracle(&quarter).t_star;
    let t_first_usize = horizon_usize(&t_first, settings).map_err(explain)?;
    let g_t = g.eval_at(t_first_usize)?;
    let distance_to_one = BigRational::one() - &g_t;
    let half = d.div_rational(&BigRational::from_integer(2.into()));
    let (branch, t_tail, t_second) = if Magnitude::from_rational(distance_to_one) < half {
        (Branch::Exact, t_first.clone(), None)
    } else {
        let t_second = if scale.is_zero() {
            BigUint::zero()
        } else {
            let delta = d.div_rational(&BigRational::from_integer(8.into())).powu(4).mul_rational(&(eps / &scale));
            g.convergence_oracle(&delta).t_star
        };
        (Branch::Epsilon, t_second.clone(), Some(t_second))
    };
    let tail_usize = horizon_usize(&t_tail, settings).map_err(explain)?;
    let gamma_tail: S = g.eval_scalar(tail_usize)?;
    let (tail, _) = optimal_policy(mdp, &gamma_tail, settings)?;
    let start = t_first.clone().max(t_tail);
    let policy = construct_with_tail::<S>(mdp, g, &tail, &start, settings).map_err(explain)?.policy;
    Ok(UnknownGapRun { policy, separation: d, source, branch, t_first, t_second })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;
    use crate::scalar::ratio;

    #[test]
    fn empty_prefix_when_switch_is_zero() {
        let mdp = instances::figure2();
        let g = DiscountFunction::constant(ratio(1, 2)).unwrap();
        let tail = StaticPolicy::first(&mdp);
        let c = construct_with_tail::<f64>(&mdp, &g, &tail, &BigUint::zero(), &Settings::default()).unwrap();
        assert_eq!(c.policy.switch_time(), 0);
        assert_eq!(c.policy.tail(), &tail);
        assert_eq!(c.inner_updates, 0);
    }

    #[test]
    fn two_phase_example_first_move() {
        let mdp = instances::figure2();
        let settings = Settings::default();
        let g = DiscountFunction::two_phase(ratio(1, 10), ratio(4, 5), BigUint::zero()).unwrap();
        let (tail, _) = optimal_policy(&mdp, &ratio(4, 5), &settings).unwrap();
        let c = construct_with_tail::<BigRational>(&mdp, &g, &tail, &BigUint::one(), &settings).unwrap();
        let s0 = mdp.state_index("s0").unwrap();
        assert_eq!(c.policy.at(0).action_names(&mdp)[s0], "s2");
        assert_eq!(c.inner_updates, mdp.total_actions() as u64);
    }

    #[test]
    fn update_count_identity() {
        let mdp = instances::figure2();
        let g = DiscountFunction::geometric(ratio(4, 5), ratio(1, 5), ratio(1, 2)).unwrap();
        let tail = StaticPolicy::first(&mdp);
        for t in [1u32, 2, 7] {
            let c = construct_with_tail::<f64>(&mdp, &g, &tail, &BigUint::from(t), &Settings::default()).unwrap();
            let t = u64::from(t);
            assert_eq!(c.inner_updates, t * (t + 1) / 2 * mdp.total_actions() as u64);
        }
    }

    #[test]
    fn exact_spe_on_crossing() {
        let mdp = instances::crossing();
        let settings = Settings::default();
        let gs = gamma::compute_gamma_set(&mdp, &settings).unwrap();
        let g = DiscountFunction::geometric(ratio(4, 5), ratio(1, 5), ratio(1, 2)).unwrap();
        let dp = compute_exact_spe::<BigRational>(&mdp, &g, &gs, &settings).unwrap();
        let c = mdp.state_index("c").unwrap();
        assert_eq!(dp.tail().action_names(&mdp)[c], "later");
        let degenerate = DiscountFunction::constant(ratio(1, 2)).unwrap();
        assert!(matches!(
            compute_exact_spe::<BigRational>(&mdp, &degenerate, &gs, &settings),
            Err(Error::DegenerateLimit { .. })
        ));
        let constant = DiscountFunction::constant(ratio(3, 10)).unwrap();
        let dp = compute_exact_spe::<f64>(&mdp, &constant, &gs, &settings).unwrap();
        assert_eq!(dp.switch_time(), 0);
        assert_eq!(dp.tail().action_names(&mdp)[c], "now");
    }

    #[test]
    fn eps_spe_down_step_prefix_length() {
        let mdp = instances::crossing();
        let g = DiscountFunction::down_step(ratio(1, 2), BigUint::from(10u32)).unwrap();
        let dp = compute_eps_spe::<f64>(&mdp, &g, &ratio(1, 100), &ratio(2, 5), &Settings::default()).unwrap();
        assert_eq!(dp.switch_time(), 11);
    }

    #[test]
    fn eps_spe_rejects_bad_parameters() {
        let mdp = instances::crossing();
        let settings = Settings::default();
        let g = DiscountFunction::constant(ratio(7, 10)).unwrap();
        assert!(compute_eps_spe::<f64>(&mdp, &g, &ratio(1, 10), &ratio(2, 5), &settings).is_err());
        assert!(compute_eps_spe::<f64>(&mdp, &g, &ratio(0, 1), &ratio(1, 10), &settings).is_err());
        assert!(compute_eps_spe::<f64>(&mdp, &g, &ratio(1, 10), &ratio(0, 1), &settings).is_err());
    }

    #[test]
    fn unknown_gap_branches() {
        let mdp = instances::crossing();
        let settings = Settings::default();
        let high = DiscountFunction::geometric(ratio(9, 10), ratio(1, 20), ratio(1, 2)).unwrap();
        let run = compute_eps_spe_unknown_gap::<BigRational>(&mdp, &high, &ratio(1, 20), None, &settings).unwrap();
        assert_eq!(run.source, SeparationSource::ExactGap);
        assert_eq!(run.branch, Branch::Exact);
        let low = DiscountFunction::geometric(ratio(3, 10), ratio(1, 10), ratio(1, 2)).unwrap();
        let run = compute_eps_spe_unknown_gap::<BigRational>(&mdp, &low, &ratio(1, 20), None, &settings).unwrap();
        assert_eq!(run.branch, Branch::Epsilon);
    }
}
