//! One-shot-deviation certification of dynamic policies, the continuity
//! bound on values under a change of discount, and the preference-reversal
//! demonstration.
//!
//! The checker recomputes every continuation value on its own and only
//! shares [`evaluate_policy`] with the constructors.

use alloc::string::String;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::discount::DiscountFunction;
use crate::error::Result;
use crate::gamma::{GammaSet, Location};
use crate::instances;
use crate::mdp::{evaluate_policy, Mdp, StaticPolicy};
use crate::scalar::{ratio, Scalar};
use crate::settings::Settings;
use crate::spe::{horizon_usize, DynamicPolicy};

#[derive(Debug, Clone, PartialEq)]
pub enum ReportKind<S> {
    /// Zero tolerance, with every player beyond the checked horizon covered
    /// by a Γ-free interval.
    Exact,
    Epsilon(S),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TailCoverage {
    /// Every player from `from` on discounts inside one Γ-free interval that
    /// also contains the limit, where the tail was checked.
    GammaCertified { from: usize },
    /// Players past the horizon are covered only by the tail check at the
    /// limit discount.
    Sampled,
    /// The limit discount lies on a degenerate point.
    LimitDegenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport<S> {
    pub kind: ReportKind<S>,
    pub eps: S,
    /// `slack[t][s]` = max_a Q_t(s, a) − Q_t(s, π_t(s)).
    pub slack: Vec<Vec<S>>,
    pub max_slack: S,
    /// (player, state) where `max_slack` is attained.
    pub worst: (usize, usize),
    /// Slack of the tail at the limit discount, when that limit is below 1.
    pub limit_slack: Option<S>,
    /// Players 0..horizon_checked were checked one by one.
    pub horizon_checked: usize,
    pub coverage: TailCoverage,
    pub passed: bool,
    pub note: String,
}

/// Q(s, a) for all actions, from dense transition rows.
fn q_row<S: Scalar>(mdp: &Mdp, s: usize, gamma: &S, values: &[S]) -> Vec<S> {
    mdp.actions(s)
        .iter()
        .map(|action| {
            let mut next = S::zero();
            for (t, p) in action.transition.iter().enumerate() {
                if !p.is_zero() {
                    next = next + S::from_exact(p) * values[t].clone();
                }
            }
            S::from_exact(&action.reward) + gamma.clone() * next
        })
        .collect()
}

fn best<S: Scalar>(q: &[S]) -> S {
    q.iter().skip(1).fold(q[0].clone(), |m, v| S::max_of(m, v.clone()))
}

/// Player t's slack in every state, given the policies of all players.
fn player_slack<S: Scalar>(mdp: &Mdp, dp: &DynamicPolicy, t: usize, gamma: &S) -> Result<Vec<S>> {
    let n = mdp.n_states();
    let mut values = evaluate_policy(mdp, dp.tail(), gamma)?.values;
    let switch = dp.switch_time();
    for i in (t + 1..switch).rev() {
        let pi = dp.at(i);
        values = (0..n).map(|s| q_row(mdp, s, gamma, &values)[pi.choice(s)].clone()).collect();
    }
    let own = dp.at(t);
    Ok((0..n)
        .map(|s| {
            let q = q_row(mdp, s, gamma, &values);
            best(&q) - q[own.choice(s)].clone()
        })
        .collect())
}

/// Checks that no player gains more than `eps` by a one-shot deviation.
///
/// Players 0 ..= switch_time + tail_extra are checked one by one. With a Γ
/// set for `mdp`, the horizon also extends to the step after which all
/// discounts stay in the Γ-free interval around the limit.
pub fn check<S: Scalar>(
    mdp: &Mdp,
    g: &DiscountFunction,
    dp: &DynamicPolicy,
    eps: &S,
    gamma_set: Option<&GammaSet>,
    settings: &Settings,
) -> Result<EquilibriumReport<S>> {
    let mut horizon = dp.switch_time() + settings.tail_extra + 1;
    let limit = g.limit();
    let mut coverage = TailCoverage::Sampled;
    if let Some(gs) = gamma_set {
        let location = gs.locate(&limit);
        coverage = match (&location, location.clearance()) {
            (Location::OnPoint(_), _) => TailCoverage::LimitDegenerate,
            (_, None) => TailCoverage::GammaCertified { from: 0 },
            (_, Some(clearance)) => {
                let delta = clearance / BigRational::from_integer(4.into());
                let from = horizon_usize(&g.oracle_rational(&delta)?.t_star, settings)?;
                horizon = horizon.max(from + 1);
                TailCoverage::GammaCertified { from }
            }
        };
    }
    horizon_usize(&BigUint::from(horizon), settings)?;

    let mut slack = Vec::with_capacity(horizon);
    let mut max_slack = S::zero();
    let mut worst = (0, 0);
    for t in 0..horizon {
        let gamma: S = g.eval_scalar(t)?;
        let row = player_slack(mdp, dp, t, &gamma)?;
        for (s, v) in row.iter().enumerate() {
            if *v > max_slack {
                max_slack = v.clone();
                worst = (t, s);
            }
        }
        slack.push(row);
    }

    let limit_slack = if limit < BigRational::one() {
        let gamma = S::from_exact(&limit);
        let stationary = DynamicPolicy::stationary(dp.tail().clone());
        let row = player_slack(mdp, &stationary, 0, &gamma)?;
        Some(row.into_iter().fold(S::zero(), S::max_of))
    } else {
        None
    };

    let allowance = if S::EXACT { eps.clone() } else { eps.clone() + S::from_f64(settings.verify_tolerance) };
    let passed = max_slack <= allowance && limit_slack.as_ref().map_or(true, |l| *l <= allowance);
    let certified = matches!(coverage, TailCoverage::GammaCertified { .. });
    let (kind, note) = if eps.is_zero() && certified {
        (ReportKind::Exact, String::from("tail players covered by a degenerate-free interval"))
    } else if eps.is_zero() {
        (
            ReportKind::Epsilon(allowance.clone()),
            String::from("no degenerate set supplied: players past the horizon are only sampled, so the verdict is epsilon-certified"),
        )
    } else {
        (ReportKind::Epsilon(eps.clone()), String::from("tail players checked at sampled steps and at the limit"))
    };
    Ok(EquilibriumReport {
        kind,
        eps: eps.clone(),
        slack,
        max_slack,
        worst,
        limit_slack,
        horizon_checked: horizon,
        coverage,
        passed,
        note,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityCheck<S> {
    pub lhs: S,
    pub rhs: S,
    pub holds: bool,
}

/// max_s |V_γ(s) − V_γ̃(s)| against 2M|S||γ − γ̃| / ((1 − max)³ (1 − min)).
pub fn continuity_bound_check<S: Scalar>(
    mdp: &Mdp,
    policy: &StaticPolicy,
    gamma: &S,
    gamma_tilde: &S,
) -> Result<ContinuityCheck<S>> {
    let v = evaluate_policy(mdp, policy, gamma)?.values;
    let w = evaluate_policy(mdp, policy, gamma_tilde)?.values;
    let lhs = v.iter().zip(&w).fold(S::zero(), |m, (a, b)| S::max_of(m, (a.clone() - b.clone()).abs_value()));
    let (hi, lo) = if gamma > gamma_tilde { (gamma, gamma_tilde) } else { (gamma_tilde, gamma) };
    let one = S::one();
    let gap = one.clone() - hi.clone();
    let m = S::from_exact(mdp.reward_bound());
    let size = S::from_exact(&ratio(mdp.n_states() as i64, 1));
    let two = one.clone() + one.clone();
    let rhs = two * m * size * (hi.clone() - lo.clone())
        / (gap.clone() * gap.clone() * gap * (one - lo.clone()));
    let slack = if S::EXACT { S::zero() } else { S::from_f64(1e-12) };
    let holds = lhs <= rhs.clone() + slack;
    Ok(ContinuityCheck { lhs, rhs, holds })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReversalRow {
    pub gamma: BigRational,
    pub value_a: BigRational,
    pub value_b: BigRational,
}

impl ReversalRow {
    pub fn prefers_a(&self) -> bool {
        self.value_a > self.value_b
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReversalReport {
    pub rows: Vec<ReversalRow>,
    /// Two-phase discount: `early` at step 0, `late` afterwards.
    pub early: BigRational,
    pub late: BigRational,
    /// Action chosen at step 0 under the early discount.
    pub planned: String,
    /// Step-1 values of the two tracks under the late discount.
    pub revisit_a: BigRational,
    pub revisit_b: BigRational,
    pub abandoned: bool,
}

fn start_values(mdp: &Mdp, gamma: &BigRational) -> Result<(BigRational, BigRational)> {
    let s0 = mdp.start();
    let a = mdp.action_index(s0, "A").expect("option A");
    let b = mdp.action_index(s0, "B").expect("option B");
    let first = StaticPolicy::first(mdp);
    let va = evaluate_policy(mdp, &first.with_choice(s0, a), gamma)?.values[s0].clone();
    let vb = evaluate_policy(mdp, &first.with_choice(s0, b), gamma)?.values[s0].clone();
    Ok((va, vb))
}

/// Values of the two options at γ ∈ {0, 3/4, 19/20}, and the plan made at
/// step 0 with discount 19/20 re-evaluated at step 1 with discount 3/4.
pub fn preference_reversal_demo() -> Result<ReversalReport> {
    let mdp = instances::figure1();
    let mut rows = Vec::new();
    for gamma in [ratio(0, 1), ratio(3, 4), ratio(19, 20)] {
        let (value_a, value_b) = start_values(&mdp, &gamma)?;
        rows.push(ReversalRow { gamma, value_a, value_b });
    }
    let early = ratio(19, 20);
    let late = ratio(3, 4);
    let (a0, b0) = start_values(&mdp, &early)?;
    let planned = if a0 > b0 { "A" } else { "B" };
    // One step later each track is one step closer to its reward.
    let first = StaticPolicy::first(&mdp);
    let values = evaluate_policy(&mdp, &first, &late)?.values;
    let revisit_a = values[mdp.state_index("a1").expect("a1")].clone();
    let revisit_b = values[mdp.state_index("b1").expect("b1")].clone();
    let prefers_late = if revisit_a > revisit_b { "A" } else { "B" };
    Ok(ReversalReport {
        rows,
        early,
        late,
        planned: planned.into(),
        revisit_a,
        revisit_b,
        abandoned: prefers_late != planned,
    })
}
