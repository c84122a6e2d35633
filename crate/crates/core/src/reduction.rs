//! The reduction from finite-horizon value iteration to the question of
//! whether some SPE starts with a given action, under a down-step discount.
//!
//! Two states are appended: every original state gets an action `a*` to
//! `s*` paying U + 1, and `s*` has the single action `a**` to the absorbing
//! `s**` paying −2(U + 1)/γ, with U = max |R| / (1 − γ). The discount is γ up
//! to step T − 1 and 0 afterwards, so players 0 … T − 1 mirror the T layers
//! of value iteration and player T cashes in `a*`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::discount::DiscountFunction;
use crate::error::{Error, Result};
use crate::mdp::{argmax_set, Action, Mdp, StaticPolicy, ValItInstance};
use crate::settings::Settings;
use crate::spe::{construct_with_tail, horizon_usize, DynamicPolicy};
use crate::verifier;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpeStartInstance {
    pub mdp: Mdp,
    pub discount: DiscountFunction,
    pub flagged_action: usize,
    /// States 0..original_states are the original model.
    pub original_states: usize,
    pub star: usize,
    pub star_star: usize,
    /// Local index of `a*` in each original state.
    pub a_star: Vec<usize>,
    pub bound: BigRational,
}

fn fresh_name(taken: &[&str], base: &str) -> String {
    let mut name = String::from(base);
    while taken.contains(&name.as_str()) {
        name.push('\'');
    }
    name
}

pub fn build_gadget(valit: &ValItInstance) -> Result<SpeStartInstance> {
    let mdp = &valit.mdp;
    let gamma = &valit.gamma;
    if !gamma.is_positive() {
        return Err(Error::InvalidParameter("the reduction needs a positive discount".into()));
    }
    if valit.horizon.is_zero() {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    let n = mdp.n_states();
    let one = BigRational::one();
    let bound = mdp.reward_bound() / (&one - gamma);
    let prize = &bound + &one;
    let penalty = -(&prize * BigRational::from_integer(2.into())) / gamma;

    let state_refs: Vec<&str> = mdp.state_names().iter().map(String::as_str).collect();
    let star_name = fresh_name(&state_refs, "s*");
    let mut with_star = state_refs.clone();
    with_star.push(&star_name);
    let star_star_name = fresh_name(&with_star, "s**");
    let action_refs: Vec<&str> =
        (0..n).flat_map(|s| mdp.actions(s).iter().map(|a| a.name.as_str())).collect();
    let a_star_name = fresh_name(&action_refs, "a*");
    let a_star_star_name = fresh_name(&action_refs, "a**");
    let stay_name = fresh_name(&action_refs, "stay");

    let total = n + 2;
    let (star, star_star) = (n, n + 1);
    let widen = |row: &[BigRational]| {
        let mut out = row.to_vec();
        out.extend([BigRational::zero(), BigRational::zero()]);
        out
    };
    let mut actions: Vec<Vec<Action>> = Vec::with_capacity(total);
    let mut a_star = Vec::with_capacity(n);
    for s in 0..n {
        let mut list: Vec<Action> =
            mdp.actions(s).iter().map(|a| Action::new(a.name.clone(), a.reward.clone(), widen(&a.transition))).collect();
        a_star.push(list.len());
        list.push(Action::deterministic(a_star_name.clone(), prize.clone(), total, star));
        actions.push(list);
    }
    actions.push(vec![Action::deterministic(a_star_star_name, penalty, total, star_star)]);
    actions.push(vec![Action::deterministic(stay_name, BigRational::zero(), total, star_star)]);
    let mut names: Vec<String> = mdp.state_names().to_vec();
    names.push(star_name);
    names.push(star_star_name);
    let gadget = Mdp::new(names, actions, mdp.start())?;
    let step = &valit.horizon - 1u32;
    let discount = DiscountFunction::down_step(gamma.clone(), step)?;
    Ok(SpeStartInstance {
        mdp: gadget,
        discount,
        flagged_action: valit.action,
        original_states: n,
        star,
        star_star,
        a_star,
        bound,
    })
}

impl SpeStartInstance {
    /// Last player with a positive discount.
    pub fn step(&self) -> &BigUint {
        match &self.discount {
            DiscountFunction::DownStep { step, .. } => step,
            _ => unreachable!("gadgets always use a down-step discount"),
        }
    }

    /// Behaviour of every player after the step: cash in `a*`.
    pub fn forced_tail(&self) -> StaticPolicy {
        let mut choices = self.a_star.clone();
        choices.push(0);
        choices.push(0);
        StaticPolicy::new(&self.mdp, choices).expect("tail is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Every combination of prefix policies, each verified.
    Brute,
    /// Backward induction branching over every argmax tie; each leaf verified.
    Exhaustive,
    /// A single backward induction with canonical tie-breaking; may miss
    /// yes-instances hidden behind ties at later players.
    Constructed,
}

#[derive(Debug, Clone)]
pub struct SpeStartAnswer {
    pub answer: bool,
    pub witness: Option<DynamicPolicy>,
    /// Candidate dynamic policies verified.
    pub examined: usize,
}

pub fn answer_spe_start(instance: &SpeStartInstance, method: Method, settings: &Settings) -> Result<SpeStartAnswer> {
    let players = horizon_usize(&(instance.step() + 1u32), settings)?;
    match method {
        Method::Brute => brute(instance, players, settings),
        Method::Exhaustive => {
            let mut search = Search { instance, settings, players, examined: 0, witness: None };
            search.run()?;
            Ok(SpeStartAnswer { answer: search.witness.is_some(), witness: search.witness, examined: search.examined })
        }
        Method::Constructed => {
            let tail = instance.forced_tail();
            let built = construct_with_tail::<BigRational>(
                &instance.mdp,
                &instance.discount,
                &tail,
                &BigUint::from(players),
                settings,
            )?;
            let dp = built.policy;
            let start = instance.mdp.start();
            let continuation = continuation_q(instance, dp.prefix(), 0)?;
            let ties = argmax_set(&continuation[start], &BigRational::zero());
            let answer = ties.contains(&instance.flagged_action);
            let witness = answer.then(|| {
                let own = dp.at(0).with_choice(start, instance.flagged_action);
                dp.with_player(0, own)
            });
            Ok(SpeStartAnswer { answer, witness, examined: 1 })
        }
    }
}

fn verify(instance: &SpeStartInstance, dp: &DynamicPolicy, settings: &Settings) -> Result<bool> {
    let report =
        verifier::check::<BigRational>(&instance.mdp, &instance.discount, dp, &BigRational::zero(), None, settings)?;
    Ok(report.passed)
}

fn brute(instance: &SpeStartInstance, players: usize, settings: &Settings) -> Result<SpeStartAnswer> {
    let per_player = instance.mdp.policy_count();
    let total = num_traits::pow(per_player, players);
    if total > BigUint::from(settings.enumeration_cap) {
        return Err(Error::EnumerationCap { count: total.to_string(), cap: settings.enumeration_cap });
    }
    let statics = StaticPolicy::enumerate(&instance.mdp, settings.enumeration_cap)?;
    let tail = instance.forced_tail();
    let start = instance.mdp.start();
    let count = total.to_usize().unwrap_or(usize::MAX);
    let mut index = vec![0usize; players];
    let mut examined = 0;
    for _ in 0..count {
        let prefix: Vec<StaticPolicy> = index.iter().map(|&i| statics[i].clone()).collect();
        examined += 1;
        if prefix[0].choice(start) == instance.flagged_action {
            let dp = DynamicPolicy::new(&instance.mdp, prefix, tail.clone())?;
            if verify(instance, &dp, settings)? {
                return Ok(SpeStartAnswer { answer: true, witness: Some(dp), examined });
            }
        }
        for slot in index.iter_mut().rev() {
            *slot += 1;
            if *slot < statics.len() {
                break;
            }
            *slot = 0;
        }
    }
    Ok(SpeStartAnswer { answer: false, witness: None, examined })
}

/// Q-values of player t when players t+1 … play `prefix[t+1..]` and the
/// forced tail afterwards.
fn continuation_q(instance: &SpeStartInstance, prefix: &[StaticPolicy], t: usize) -> Result<Vec<Vec<BigRational>>> {
    let mdp = &instance.mdp;
    let gamma = instance.discount.eval_at(t)?;
    let model = mdp.lift::<BigRational>();
    let tail = instance.forced_tail();
    let mut values = model.evaluate(&tail, &gamma)?;
    for i in (t + 1..prefix.len()).rev() {
        let q = model.q_table(&gamma, &values);
        values = (0..mdp.n_states()).map(|s| q[s][prefix[i].choice(s)].clone()).collect();
    }
    Ok(model.q_table(&gamma, &values))
}

struct Search<'a> {
    instance: &'a SpeStartInstance,
    settings: &'a Settings,
    players: usize,
    examined: usize,
    witness: Option<DynamicPolicy>,
}

impl Search<'_> {
    fn run(&mut self) -> Result<()> {
        let mut prefix = vec![self.instance.forced_tail(); self.players];
        self.descend(self.players, &mut prefix)
    }

    /// Fills players `t-1`, `t-2`, … given players `t..` in `prefix`.
    fn descend(&mut self, t: usize, prefix: &mut Vec<StaticPolicy>) -> Result<()> {
        if self.witness.is_some() {
            return Ok(());
        }
        if t == 0 {
            self.examined += 1;
            if self.examined > self.settings.enumeration_cap {
                return Err(Error::EnumerationCap {
                    count: format!("more than {}", self.settings.enumeration_cap),
                    cap: self.settings.enumeration_cap,
                });
            }
            let dp = DynamicPolicy::new(&self.instance.mdp, prefix.clone(), self.instance.forced_tail())?;
            if prefix[0].choice(self.instance.mdp.start()) == self.instance.flagged_action
                && verify(self.instance, &dp, self.settings)?
            {
                self.witness = Some(dp);
            }
            return Ok(());
        }
        let player = t - 1;
        let q = continuation_q(self.instance, prefix, player)?;
        let start = self.instance.mdp.start();
        let mut options: Vec<Vec<usize>> = q.iter().map(|row| argmax_set(row, &BigRational::zero())).collect();
        if player == 0 {
            // Nobody reacts to player 0: only the start state matters.
            for (s, set) in options.iter_mut().enumerate() {
                if s == start {
                    if set.contains(&self.instance.flagged_action) {
                        *set = vec![self.instance.flagged_action];
                    } else {
                        return Ok(());
                    }
                } else {
                    set.truncate(1);
                }
            }
        }
        let mut choice = vec![0usize; options.len()];
        loop {
            let policy: Vec<usize> = choice.iter().zip(&options).map(|(&i, set)| set[i]).collect();
            prefix[player] = StaticPolicy::new(&self.instance.mdp, policy)?;
            self.descend(player, prefix)?;
            if self.witness.is_some() {
                return Ok(());
            }
            let mut k = options.len();
            loop {
                if k == 0 {
                    return Ok(());
                }
                k -= 1;
                choice[k] += 1;
                if choice[k] < options[k].len() {
                    break;
                }
                choice[k] = 0;
            }
        }
    }
}

/// Margins of the two dominance facts behind the reduction, along `dp`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dominance {
    /// min over players t ≤ step and original states of
    /// max_{a ≠ a*} Q_t(s, a) − Q_t(s, a*).
    pub dominated_margin: BigRational,
    /// min over original states of R(s, a*) − max_{a ≠ a*} R(s, a), which is
    /// player step+1's comparison since its discount is 0.
    pub dominant_margin: BigRational,
}

impl Dominance {
    pub fn holds(&self) -> bool {
        self.dominated_margin.is_positive() && self.dominant_margin.is_positive()
    }
}

pub fn dominance(instance: &SpeStartInstance, dp: &DynamicPolicy, settings: &Settings) -> Result<Dominance> {
    let players = horizon_usize(&(instance.step() + 1u32), settings)?;
    let prefix: Vec<StaticPolicy> = (0..players).map(|t| dp.at(t).clone()).collect();
    let mut dominated: Option<BigRational> = None;
    for t in 0..players {
        let q = continuation_q(instance, &prefix, t)?;
        for s in 0..instance.original_states {
            let star = instance.a_star[s];
            let other = q[s]
                .iter()
                .enumerate()
                .filter(|(a, _)| *a != star)
                .map(|(_, v)| v.clone())
                .max()
                .expect("original states keep their actions");
            let margin = other - &q[s][star];
            dominated = Some(dominated.map_or(margin.clone(), |m| m.min(margin)));
        }
    }
    let mut dominant: Option<BigRational> = None;
    for s in 0..instance.original_states {
        let star = instance.a_star[s];
        let actions = instance.mdp.actions(s);
        let other = actions
            .iter()
            .enumerate()
            .filter(|(a, _)| *a != star)
            .map(|(_, a)| a.reward.clone())
            .max()
            .expect("original states keep their actions");
        let margin = &actions[star].reward - other;
        dominant = Some(dominant.map_or(margin.clone(), |m| m.min(margin)));
    }
    Ok(Dominance {
        dominated_margin: dominated.unwrap_or_else(BigRational::zero),
        dominant_margin: dominant.unwrap_or_else(BigRational::zero),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;
    use crate::mdp::solve_valit;
    use crate::scalar::ratio;

    #[test]
    fn trivial_gadget() {
        let mdp = instances::deterministic(&[("s", &[("stay", 0, "s")])], "s");
        let valit = ValItInstance::new(mdp, ratio(1, 2), 0, BigUint::one()).unwrap();
        let g = build_gadget(&valit).unwrap();
        assert_eq!(g.mdp.n_states(), 3);
        assert_eq!(g.bound, ratio(0, 1));
        assert_eq!(g.mdp.action(0, g.a_star[0]).reward, ratio(1, 1));
        assert_eq!(g.mdp.action(g.star, 0).reward, ratio(-4, 1));
        let settings = Settings::default();
        for method in [Method::Brute, Method::Exhaustive, Method::Constructed] {
            assert!(answer_spe_start(&g, method, &settings).unwrap().answer);
        }
    }

    #[test]
    fn figure1_gadget_matches_valit() {
        let mdp = instances::figure1();
        let settings = Settings::default();
        let s0 = mdp.start();
        for (name, expected) in [("B", true), ("A", false)] {
            let a = mdp.action_index(s0, name).unwrap();
            let valit = ValItInstance::new(mdp.clone(), ratio(19, 20), a, BigUint::from(5u32)).unwrap();
            assert_eq!(solve_valit::<BigRational>(&valit, &settings).unwrap(), expected);
            let g = build_gadget(&valit).unwrap();
            assert_eq!(g.bound, ratio(2200, 1));
            assert_eq!(g.mdp.action(g.star, 0).reward, -ratio(2 * 2201 * 20, 19));
            let ans = answer_spe_start(&g, Method::Exhaustive, &settings).unwrap();
            assert_eq!(ans.answer, expected);
            let constructed = answer_spe_start(&g, Method::Constructed, &settings).unwrap();
            assert_eq!(constructed.answer, expected);
        }
    }

    #[test]
    fn gadget_rows_and_dominance() {
        let mdp = instances::figure2();
        let valit = ValItInstance::new(mdp.clone(), ratio(3, 4), 0, BigUint::from(3u32)).unwrap();
        let g = build_gadget(&valit).unwrap();
        for s in 0..mdp.n_states() {
            for (a, action) in mdp.actions(s).iter().enumerate() {
                assert_eq!(&g.mdp.action(s, a).transition[..mdp.n_states()], &action.transition[..]);
                assert_eq!(g.mdp.action(s, a).reward, action.reward);
            }
        }
        let settings = Settings::default();
        let built = construct_with_tail::<BigRational>(
            &g.mdp,
            &g.discount,
            &g.forced_tail(),
            &BigUint::from(3u32),
            &settings,
        )
        .unwrap();
        assert!(dominance(&g, &built.policy, &settings).unwrap().holds());
    }

    #[test]
    fn zero_discount_rejected() {
        let mdp = instances::figure2();
        let valit = ValItInstance::new(mdp, ratio(0, 1), 0, BigUint::one()).unwrap();
        assert!(build_gadget(&valit).is_err());
    }
}
