#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tvdisc_core::mdp::{Action, Mdp, StaticPolicy};
use tvdisc_core::scalar::ratio;
use tvdisc_core::BigRational;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random model with integer rewards in [-reward, reward] and transition
/// rows built from small integer weights.
pub fn random_mdp(rng: &mut ChaCha8Rng, max_states: usize, max_actions: usize, reward: i64) -> Mdp {
    let n = rng.gen_range(1..=max_states);
    let names = (0..n).map(|s| format!("s{s}")).collect();
    let actions = (0..n)
        .map(|_| {
            let k = rng.gen_range(1..=max_actions);
            (0..k)
                .map(|a| {
                    let r = ratio(rng.gen_range(-reward..=reward), 1);
                    Action::new(format!("a{a}"), r, random_row(rng, n))
                })
                .collect()
        })
        .collect();
    Mdp::new(names, actions, 0).expect("generated model is valid")
}

/// Deterministic random model: every action moves to one state.
pub fn random_deterministic(rng: &mut ChaCha8Rng, max_states: usize, max_actions: usize, reward: i64) -> Mdp {
    let n = rng.gen_range(1..=max_states);
    let names = (0..n).map(|s| format!("s{s}")).collect();
    let actions = (0..n)
        .map(|_| {
            let k = rng.gen_range(1..=max_actions);
            (0..k)
                .map(|a| {
                    let r = ratio(rng.gen_range(-reward..=reward), 1);
                    Action::deterministic(format!("a{a}"), r, n, rng.gen_range(0..n))
                })
                .collect()
        })
        .collect();
    Mdp::new(names, actions, 0).expect("generated model is valid")
}

fn random_row(rng: &mut ChaCha8Rng, n: usize) -> Vec<BigRational> {
    if rng.gen_bool(0.4) {
        let mut row = vec![ratio(0, 1); n];
        row[rng.gen_range(0..n)] = ratio(1, 1);
        return row;
    }
    let mut weights: Vec<i64> = (0..n).map(|_| rng.gen_range(0..4)).collect();
    if weights.iter().all(|w| *w == 0) {
        weights[rng.gen_range(0..n)] = 1;
    }
    let total: i64 = weights.iter().sum();
    weights.into_iter().map(|w| ratio(w, total)).collect()
}

pub fn random_policy(rng: &mut ChaCha8Rng, mdp: &Mdp) -> StaticPolicy {
    let choices = (0..mdp.n_states()).map(|s| rng.gen_range(0..mdp.actions(s).len())).collect();
    StaticPolicy::new(mdp, choices).expect("valid choices")
}

/// Rational in [lo, hi] with the given denominator.
pub fn random_ratio(rng: &mut ChaCha8Rng, lo: i64, hi: i64, den: i64) -> BigRational {
    ratio(rng.gen_range(lo..=hi), den)
}

/// Exact forward expectation of the first `k` discounted rewards of `policy`
/// from every start state.
pub fn truncated_values(mdp: &Mdp, policy: &StaticPolicy, gamma: f64, k: usize) -> Vec<f64> {
    let n = mdp.n_states();
    let f = |x: &BigRational| tvdisc_core::scalar::rational_to_f64(x);
    (0..n)
        .map(|start| {
            let mut dist = vec![0.0; n];
            dist[start] = 1.0;
            let mut total = 0.0;
            let mut weight = 1.0;
            for _ in 0..k {
                let mut next = vec![0.0; n];
                for s in 0..n {
                    if dist[s] == 0.0 {
                        continue;
                    }
                    let action = mdp.action(s, policy.choice(s));
                    total += weight * dist[s] * f(&action.reward);
                    for (t, p) in action.transition.iter().enumerate() {
                        next[t] += dist[s] * f(p);
                    }
                }
                dist = next;
                weight *= gamma;
            }
            total
        })
        .collect()
}

pub fn max_reward(mdp: &Mdp) -> f64 {
    tvdisc_core::scalar::rational_to_f64(mdp.reward_bound())
}
