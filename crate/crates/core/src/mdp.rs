//! MDP data model and the constant-discount solvers: policy evaluation,
//! Howard policy iteration, optimal action sets, equivalence of static
//! policies, and finite-horizon value iteration.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::gamma;
use crate::linalg;
use crate::scalar::Scalar;
use crate::settings::Settings;

/// One action available in a state: its reward and a dense transition row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Action {
    pub name: String,
    pub reward: BigRational,
    pub transition: Vec<BigRational>,
}

impl Action {
    pub fn new(name: impl Into<String>, reward: BigRational, transition: Vec<BigRational>) -> Self {
        Action { name: name.into(), reward, transition }
    }

    /// Deterministic move to `target` in an `n`-state model.
    pub fn deterministic(name: impl Into<String>, reward: BigRational, n: usize, target: usize) -> Self {
        let mut row = vec![BigRational::zero(); n];
        row[target] = BigRational::one();
        Action::new(name, reward, row)
    }
}

/// A finite MDP with exact rational rewards and transition probabilities.
///
/// Actions are addressed per state by their local index in `actions(s)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mdp {
    state_names: Vec<String>,
    actions: Vec<Vec<Action>>,
    start: usize,
    reward_bound: BigRational,
    bit_size: u64,
    action_union: usize,
}

impl Mdp {
    pub fn new(state_names: Vec<String>, actions: Vec<Vec<Action>>, start: usize) -> Result<Self> {
        let n = state_names.len();
        if n == 0 {
            return Err(Error::InvalidModel("the state set is empty".into()));
        }
        if actions.len() != n {
            return Err(Error::InvalidModel(format!(
                "{} states but {} action lists",
                n,
                actions.len()
            )));
        }
        if start >= n {
            return Err(Error::InvalidModel(format!("start state index {start} out of range")));
        }
        let unique: BTreeSet<&str> = state_names.iter().map(String::as_str).collect();
        if unique.len() != n {
            return Err(Error::InvalidModel("state names are not unique".into()));
        }
        let mut reward_bound = BigRational::zero();
        let mut bit_size = 1u64;
        let mut names = BTreeSet::new();
        for (s, list) in actions.iter().enumerate() {
            if list.is_empty() {
                return Err(Error::InvalidModel(format!("state '{}' has no actions", state_names[s])));
            }
            let mut local = BTreeSet::new();
            for action in list {
                if !local.insert(action.name.as_str()) {
                    return Err(Error::InvalidModel(format!(
                        "duplicate action '{}' in state '{}'",
                        action.name, state_names[s]
                    )));
                }
                names.insert(action.name.as_str());
                if action.transition.len() != n {
                    return Err(Error::InvalidModel(format!(
                        "transition row of ({}, {}) has length {}, expected {}",
                        state_names[s],
                        action.name,
                        action.transition.len(),
                        n
                    )));
                }
                if action.transition.iter().any(|p| p.is_negative()) {
                    return Err(Error::InvalidModel(format!(
                        "negative probability in ({}, {})",
                        state_names[s], action.name
                    )));
                }
                let total: BigRational = action.transition.iter().sum();
                if !total.is_one() {
                    return Err(Error::InvalidModel(format!(
                        "transition row of ({}, {}) sums to {}, not 1",
                        state_names[s], action.name, total
                    )));
                }
                let magnitude = action.reward.abs();
                if magnitude > reward_bound {
                    reward_bound = magnitude;
                }
                for value in core::iter::once(&action.reward).chain(action.transition.iter()) {
                    bit_size = bit_size.max(entry_bits(value));
                }
            }
        }
        Ok(Mdp {
            action_union: names.len(),
            state_names,
            actions,
            start,
            reward_bound,
            bit_size,
        })
    }

    pub fn n_states(&self) -> usize {
        self.state_names.len()
    }

    pub fn state_names(&self) -> &[String] {
        &self.state_names
    }

    pub fn state_name(&self, s: usize) -> &str {
        &self.state_names[s]
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.state_names.iter().position(|n| n == name)
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn actions(&self, s: usize) -> &[Action] {
        &self.actions[s]
    }

    pub fn action(&self, s: usize, a: usize) -> &Action {
        &self.actions[s][a]
    }

    pub fn action_index(&self, s: usize, name: &str) -> Option<usize> {
        self.actions[s].iter().position(|a| a.name == name)
    }

    /// Σ_s |A_s|.
    pub fn total_actions(&self) -> usize {
        self.actions.iter().map(Vec::len).sum()
    }

    /// |A|: number of distinct action names across all states.
    pub fn action_union_size(&self) -> usize {
        self.action_union
    }

    /// M = max |R(s, a)|.
    pub fn reward_bound(&self) -> &BigRational {
        &self.reward_bound
    }

    /// b: the largest bit size of a reward or probability entry, where a
    /// rational p/q counts max(bits |p|, bits q).
    pub fn bit_size(&self) -> u64 {
        self.bit_size
    }

    /// |Π| = Π_s |A_s|.
    pub fn policy_count(&self) -> BigUint {
        self.actions.iter().map(|a| BigUint::from(a.len())).product()
    }

    /// Rewards and sparse transition rows converted to the scalar type `S`.
    pub fn lift<S: Scalar>(&self) -> Lifted<S> {
        let rewards = self
            .actions
            .iter()
            .map(|list| list.iter().map(|a| S::from_exact(&a.reward)).collect())
            .collect();
        let rows = self
            .actions
            .iter()
            .map(|list| {
                list.iter()
                    .map(|a| {
                        a.transition
                            .iter()
                            .enumerate()
                            .filter(|(_, p)| !p.is_zero())
                            .map(|(t, p)| (t, S::from_exact(p)))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Lifted { rewards, rows }
    }
}

fn entry_bits(value: &BigRational) -> u64 {
    value.numer().bits().max(value.denom().bits()).max(1)
}

/// Rewards and transition rows of an [`Mdp`] in a particular scalar type.
#[derive(Debug, Clone)]
pub struct Lifted<S> {
    pub rewards: Vec<Vec<S>>,
    pub rows: Vec<Vec<Vec<(usize, S)>>>,
}

impl<S: Scalar> Lifted<S> {
    pub fn n_states(&self) -> usize {
        self.rewards.len()
    }

    /// R(s,a) + γ Σ P(s,a,s') V(s').
    pub fn backup(&self, s: usize, a: usize, gamma: &S, values: &[S]) -> S {
        let mut expected = S::zero();
        for (t, p) in &self.rows[s][a] {
            expected = expected + p.clone() * values[*t].clone();
        }
        self.rewards[s][a].clone() + gamma.clone() * expected
    }

    /// Unique solution of V = r_π + γ P_π V.
    pub fn evaluate(&self, policy: &StaticPolicy, gamma: &S) -> Result<Vec<S>> {
        let n = self.n_states();
        let mut matrix = vec![vec![S::zero(); n]; n];
        let mut rhs = Vec::with_capacity(n);
        for s in 0..n {
            let a = policy.choice(s);
            matrix[s][s] = S::one();
            for (t, p) in &self.rows[s][a] {
                matrix[s][*t] = matrix[s][*t].clone() - gamma.clone() * p.clone();
            }
            rhs.push(self.rewards[s][a].clone());
        }
        linalg::solve(matrix, rhs)
    }

    pub fn q_table(&self, gamma: &S, values: &[S]) -> Vec<Vec<S>> {
        (0..self.n_states())
            .map(|s| (0..self.rewards[s].len()).map(|a| self.backup(s, a, gamma, values)).collect())
            .collect()
    }
}

/// Deterministic state → action map, stored as local action indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StaticPolicy(Vec<usize>);

impl StaticPolicy {
    pub fn new(mdp: &Mdp, choices: Vec<usize>) -> Result<Self> {
        if choices.len() != mdp.n_states() {
            return Err(Error::InvalidPolicy(format!(
                "policy covers {} states, model has {}",
                choices.len(),
                mdp.n_states()
            )));
        }
        for (s, &a) in choices.iter().enumerate() {
            if a >= mdp.actions(s).len() {
                return Err(Error::InvalidPolicy(format!(
                    "action index {a} not available in state '{}'",
                    mdp.state_name(s)
                )));
            }
        }
        Ok(StaticPolicy(choices))
    }

    /// The policy picking the first listed action everywhere.
    pub fn first(mdp: &Mdp) -> Self {
        StaticPolicy(vec![0; mdp.n_states()])
    }

    pub fn from_names(mdp: &Mdp, names: &[&str]) -> Result<Self> {
        let choices = names
            .iter()
            .enumerate()
            .map(|(s, name)| {
                mdp.action_index(s, name).ok_or_else(|| {
                    Error::InvalidPolicy(format!("no action '{}' in state '{}'", name, mdp.state_name(s)))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        StaticPolicy::new(mdp, choices)
    }

    pub fn choice(&self, s: usize) -> usize {
        self.0[s]
    }

    pub fn choices(&self) -> &[usize] {
        &self.0
    }

    pub fn with_choice(&self, s: usize, a: usize) -> Self {
        let mut next = self.0.clone();
        next[s] = a;
        StaticPolicy(next)
    }

    pub fn is_valid_for(&self, mdp: &Mdp) -> bool {
        self.0.len() == mdp.n_states() && self.0.iter().enumerate().all(|(s, &a)| a < mdp.actions(s).len())
    }

    pub fn action_names<'a>(&self, mdp: &'a Mdp) -> Vec<&'a str> {
        self.0.iter().enumerate().map(|(s, &a)| mdp.action(s, a).name.as_str()).collect()
    }

    /// Every static policy of `mdp`, in lexicographic order of choices.
    pub fn enumerate(mdp: &Mdp, cap: usize) -> Result<Vec<StaticPolicy>> {
        let count = mdp.policy_count();
        if count > BigUint::from(cap) {
            return Err(Error::EnumerationCap { count: count.to_string(), cap });
        }
        let count = count.to_usize().unwrap_or(usize::MAX);
        let sizes: Vec<usize> = (0..mdp.n_states()).map(|s| mdp.actions(s).len()).collect();
        let mut out = Vec::with_capacity(count);
        let mut current = vec![0usize; sizes.len()];
        loop {
            out.push(StaticPolicy(current.clone()));
            let mut k = sizes.len();
            loop {
                if k == 0 {
                    return Ok(out);
                }
                k -= 1;
                current[k] += 1;
                if current[k] < sizes[k] {
                    break;
                }
                current[k] = 0;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable<S> {
    pub values: Vec<S>,
}

impl<S> ValueTable<S> {
    pub fn get(&self, s: usize) -> &S {
        &self.values[s]
    }
}

/// Q-values for every available (state, action) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable<S> {
    pub values: Vec<Vec<S>>,
}

impl<S> QTable<S> {
    pub fn get(&self, s: usize, a: usize) -> &S {
        &self.values[s][a]
    }
}

/// Π*_γ represented as a product of per-state action sets.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalActionSets<S> {
    pub gamma: S,
    pub per_state: Vec<Vec<usize>>,
    pub tolerance: S,
}

impl<S> OptimalActionSets<S> {
    /// Number of static policies in the product.
    pub fn product_size(&self) -> BigUint {
        self.per_state.iter().map(|v| BigUint::from(v.len())).product()
    }

    pub fn contains(&self, policy: &StaticPolicy) -> bool {
        policy.choices().iter().enumerate().all(|(s, a)| self.per_state[s].contains(a))
    }

    /// All policies in the product (caller bounds the size).
    pub fn policies(&self) -> Vec<StaticPolicy> {
        let mut out = vec![StaticPolicy(Vec::new())];
        for options in &self.per_state {
            let mut next = Vec::with_capacity(out.len() * options.len());
            for prefix in &out {
                for &a in options {
                    let mut p = prefix.0.clone();
                    p.push(a);
                    next.push(StaticPolicy(p));
                }
            }
            out = next;
        }
        out
    }
}

pub(crate) fn check_gamma<S: Scalar>(gamma: &S) -> Result<()> {
    if *gamma < S::zero() || *gamma >= S::one() {
        return Err(Error::DiscountOutOfRange(format!("{gamma:?}")));
    }
    Ok(())
}

/// Smallest index whose value is within `tol` of the maximum.
pub(crate) fn argmax_first<S: Scalar>(values: &[S], tol: &S) -> usize {
    let best = values.iter().skip(1).fold(values[0].clone(), |m, v| S::max_of(m, v.clone()));
    let threshold = best - tol.clone();
    values.iter().position(|v| *v >= threshold).unwrap_or(0)
}

/// All indices whose value is within `tol` of the maximum.
pub(crate) fn argmax_set<S: Scalar>(values: &[S], tol: &S) -> Vec<usize> {
    let best = values.iter().skip(1).fold(values[0].clone(), |m, v| S::max_of(m, v.clone()));
    let threshold = best - tol.clone();
    values.iter().enumerate().filter(|(_, v)| **v >= threshold).map(|(i, _)| i).collect()
}

/// V^π_γ, the unique solution of V(s) = R(s,π(s)) + γ Σ P(s,π(s),s') V(s').
pub fn evaluate_policy<S: Scalar>(mdp: &Mdp, policy: &StaticPolicy, gamma: &S) -> Result<ValueTable<S>> {
    check_gamma(gamma)?;
    if !policy.is_valid_for(mdp) {
        return Err(Error::InvalidPolicy("policy does not match the model".into()));
    }
    Ok(ValueTable { values: mdp.lift::<S>().evaluate(policy, gamma)? })
}

/// Q(s,a) = R(s,a) + γ Σ P(s,a,s') V(s').
pub fn q_from_values<S: Scalar>(mdp: &Mdp, values: &ValueTable<S>, gamma: &S) -> QTable<S> {
    QTable { values: mdp.lift::<S>().q_table(gamma, &values.values) }
}

/// Howard policy iteration from the all-first-action policy. The returned
/// policy picks, in every state, the smallest action index whose Q-value is
/// within the tie tolerance of V*.
pub fn optimal_policy<S: Scalar>(
    mdp: &Mdp,
    gamma: &S,
    settings: &Settings,
) -> Result<(StaticPolicy, ValueTable<S>)> {
    check_gamma(gamma)?;
    let model = mdp.lift::<S>();
    Ok(optimal_policy_lifted(&model, gamma, settings)?)
}

pub(crate) fn optimal_policy_lifted<S: Scalar>(
    model: &Lifted<S>,
    gamma: &S,
    settings: &Settings,
) -> Result<(StaticPolicy, ValueTable<S>)> {
    let tol = S::tie_tolerance(settings.tie_tolerance);
    let n = model.n_states();
    let mut policy = StaticPolicy(vec![0; n]);
    let mut values = model.evaluate(&policy, gamma)?;
    loop {
        let mut changed = false;
        let mut next = policy.0.clone();
        for (s, slot) in next.iter_mut().enumerate() {
            let q: Vec<S> = (0..model.rewards[s].len()).map(|a| model.backup(s, a, gamma, &values)).collect();
            let current = q[*slot].clone();
            let best = argmax_first(&q, &S::zero());
            if q[best] > current + tol.clone() {
                *slot = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        policy = StaticPolicy(next);
        values = model.evaluate(&policy, gamma)?;
    }
    // Canonical tie-break: smallest index among the near-optimal actions.
    let canonical: Vec<usize> = (0..n)
        .map(|s| {
            let q: Vec<S> = (0..model.rewards[s].len()).map(|a| model.backup(s, a, gamma, &values)).collect();
            argmax_first(&q, &tol)
        })
        .collect();
    if canonical != policy.0 {
        policy = StaticPolicy(canonical);
        values = model.evaluate(&policy, gamma)?;
    }
    Ok((policy, ValueTable { values }))
}

/// per_state(s) = {a : Q*(s,a) ≥ V*(s) − tolerance}.
pub fn optimal_action_sets<S: Scalar>(
    mdp: &Mdp,
    gamma: &S,
    tolerance: &S,
    settings: &Settings,
) -> Result<OptimalActionSets<S>> {
    if *tolerance < S::zero() {
        return Err(Error::InvalidParameter("tolerance must be nonnegative".into()));
    }
    check_gamma(gamma)?;
    let model = mdp.lift::<S>();
    let (_, values) = optimal_policy_lifted(&model, gamma, settings)?;
    let per_state = (0..mdp.n_states())
        .map(|s| {
            let q: Vec<S> =
                (0..model.rewards[s].len()).map(|a| model.backup(s, a, gamma, &values.values)).collect();
            let best = q.iter().skip(1).fold(q[0].clone(), |m, v| S::max_of(m, v.clone()));
            let threshold = best - tolerance.clone();
            q.iter().enumerate().filter(|(_, v)| **v >= threshold).map(|(a, _)| a).collect()
        })
        .collect();
    Ok(OptimalActionSets { gamma: gamma.clone(), per_state, tolerance: tolerance.clone() })
}

/// Exact equivalence: V^{p1}_γ(s) = V^{p2}_γ(s) for every s and every γ in
/// [0, 1), decided by comparing value functions as rational functions.
pub fn policies_equivalent(mdp: &Mdp, p1: &StaticPolicy, p2: &StaticPolicy) -> bool {
    if p1 == p2 {
        return true;
    }
    let v1 = gamma::policy_values(mdp, p1);
    let v2 = gamma::policy_values(mdp, p2);
    v1.same_values(&v2)
}

/// Backward value iteration with V_T ≡ 0. Returns `(Q_0..Q_{T-1}, V_0..V_T)`.
pub fn finite_horizon_value_iteration<S: Scalar>(
    mdp: &Mdp,
    gamma: &S,
    horizon: &BigUint,
    settings: &Settings,
) -> Result<(Vec<QTable<S>>, Vec<ValueTable<S>>)> {
    if horizon.is_zero() {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    let t_len = horizon
        .to_usize()
        .filter(|t| *t <= settings.horizon_cap)
        .ok_or_else(|| Error::HorizonCap { requested: horizon.to_string(), cap: settings.horizon_cap })?;
    let model = mdp.lift::<S>();
    let n = mdp.n_states();
    let mut qs = Vec::with_capacity(t_len);
    let mut vs = Vec::with_capacity(t_len + 1);
    let mut next = vec![S::zero(); n];
    vs.push(ValueTable { values: next.clone() });
    for _ in 0..t_len {
        let q = model.q_table(gamma, &next);
        next = q
            .iter()
            .map(|row| row.iter().skip(1).fold(row[0].clone(), |m, v| S::max_of(m, v.clone())))
            .collect();
        qs.push(QTable { values: q });
        vs.push(ValueTable { values: next.clone() });
    }
    qs.reverse();
    vs.reverse();
    Ok((qs, vs))
}

/// A value-iteration decision instance: is `action` optimal at the start
/// state at step 0 of a `horizon`-step backward induction?
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValItInstance {
    pub mdp: Mdp,
    pub gamma: BigRational,
    pub action: usize,
    pub horizon: BigUint,
}

impl ValItInstance {
    pub fn new(mdp: Mdp, gamma: BigRational, action: usize, horizon: BigUint) -> Result<Self> {
        if action >= mdp.actions(mdp.start()).len() {
            return Err(Error::InvalidParameter("flagged action is not available at the start state".into()));
        }
        check_gamma(&gamma)?;
        Ok(ValItInstance { mdp, gamma, action, horizon })
    }
}

/// Actions attaining max_a Q_0(s_start, a).
pub fn valit_argmax<S: Scalar>(instance: &ValItInstance, settings: &Settings) -> Result<Vec<usize>> {
    let gamma = S::from_exact(&instance.gamma);
    let (qs, _) = finite_horizon_value_iteration(&instance.mdp, &gamma, &instance.horizon, settings)?;
    let start = instance.mdp.start();
    Ok(argmax_set(&qs[0].values[start], &S::tie_tolerance(settings.tie_tolerance)))
}

/// True iff the flagged action is in argmax_a Q_0(s_start, a).
pub fn solve_valit<S: Scalar>(instance: &ValItInstance, settings: &Settings) -> Result<bool> {
    Ok(valit_argmax::<S>(instance, settings)?.contains(&instance.action))
}
