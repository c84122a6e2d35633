mod common;

use proptest::prelude::*;
use tvdisc_core::mdp::{
    evaluate_policy, finite_horizon_value_iteration, optimal_policy, policies_equivalent, q_from_values,
};
use tvdisc_core::scalar::{rational_to_f64, ratio};
use tvdisc_core::{BigRational, BigUint, Settings};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn values_are_fixed_points(seed in any::<u64>(), g in 0i64..95) {
        let mut rng = common::rng(seed);
        let mdp = common::random_mdp(&mut rng, 5, 3, 5);
        let pi = common::random_policy(&mut rng, &mdp);
        let gamma = ratio(g, 100);
        let exact = evaluate_policy(&mdp, &pi, &gamma).unwrap();
        let q = q_from_values(&mdp, &exact, &gamma);
        for s in 0..mdp.n_states() {
            prop_assert_eq!(q.get(s, pi.choice(s)), exact.get(s));
        }
        let gf = g as f64 / 100.0;
        let float = evaluate_policy(&mdp, &pi, &gf).unwrap();
        let qf = q_from_values(&mdp, &float, &gf);
        for s in 0..mdp.n_states() {
            prop_assert!((qf.get(s, pi.choice(s)) - float.get(s)).abs() <= 1e-10);
        }
    }

    #[test]
    fn values_are_bounded(seed in any::<u64>(), g in 0i64..99) {
        let mut rng = common::rng(seed);
        let mdp = common::random_mdp(&mut rng, 6, 3, 9);
        let pi = common::random_policy(&mut rng, &mdp);
        let gamma = ratio(g, 100);
        let v = evaluate_policy(&mdp, &pi, &gamma).unwrap();
        let bound = mdp.reward_bound() / (BigRational::from_integer(1.into()) - &gamma);
        for x in &v.values {
            prop_assert!(num_traits::Signed::abs(x) <= bound);
        }
    }

    #[test]
    fn optimal_beats_random_policies(seed in any::<u64>(), g in 0i64..95) {
        let mut rng = common::rng(seed);
        let mdp = common::random_mdp(&mut rng, 6, 3, 5);
        let gamma = g as f64 / 100.0;
        let settings = Settings::default();
        let (_, best) = optimal_policy(&mdp, &gamma, &settings).unwrap();
        for _ in 0..100 {
            let pi = common::random_policy(&mut rng, &mdp);
            let v = evaluate_policy(&mdp, &pi, &gamma).unwrap();
            for s in 0..mdp.n_states() {
                prop_assert!(best.get(s) >= &(v.get(s) - 1e-9));
            }
        }
    }

    #[test]
    fn truncated_expectation_agrees(seed in any::<u64>(), g in 0i64..90, k in 1usize..60) {
        let mut rng = common::rng(seed);
        let mdp = common::random_mdp(&mut rng, 5, 3, 5);
        let pi = common::random_policy(&mut rng, &mdp);
        let gamma = g as f64 / 100.0;
        let v = evaluate_policy(&mdp, &pi, &gamma).unwrap();
        let approx = common::truncated_values(&mdp, &pi, gamma, k);
        let tol = common::max_reward(&mdp) * gamma.powi(k as i32) / (1.0 - gamma) + 1e-9;
        for s in 0..mdp.n_states() {
            prop_assert!((v.get(s) - approx[s]).abs() <= tol);
        }
    }

    #[test]
    fn equivalence_is_an_equivalence_relation(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let mdp = common::random_deterministic(&mut rng, 4, 3, 2);
        let p = common::random_policy(&mut rng, &mdp);
        let q = common::random_policy(&mut rng, &mdp);
        let r = common::random_policy(&mut rng, &mdp);
        prop_assert!(policies_equivalent(&mdp, &p, &p));
        prop_assert_eq!(policies_equivalent(&mdp, &p, &q), policies_equivalent(&mdp, &q, &p));
        if policies_equivalent(&mdp, &p, &q) && policies_equivalent(&mdp, &q, &r) {
            prop_assert!(policies_equivalent(&mdp, &p, &r));
        }
    }

    #[test]
    fn value_iteration_approaches_optimum(seed in any::<u64>(), g in 0i64..90, horizon in 1u32..80) {
        let mut rng = common::rng(seed);
        let mdp = common::random_mdp(&mut rng, 5, 3, 5);
        let gamma = g as f64 / 100.0;
        let settings = Settings::default();
        let (_, vs) = finite_horizon_value_iteration(&mdp, &gamma, &BigUint::from(horizon), &settings).unwrap();
        let (_, best) = optimal_policy(&mdp, &gamma, &settings).unwrap();
        let tol = common::max_reward(&mdp) * gamma.powi(horizon as i32) / (1.0 - gamma) + 1e-9;
        let start = mdp.start();
        prop_assert!((vs[0].get(start) - best.get(start)).abs() <= tol);
    }
}

#[test]
fn two_state_chain_against_summation() {
    let mdp = tvdisc_core::instances::deterministic(
        &[("s", &[("go", 0, "u")]), ("u", &[("stay", 2, "u")])],
        "s",
    );
    let pi = tvdisc_core::StaticPolicy::first(&mdp);
    let v = evaluate_policy(&mdp, &pi, &0.8).unwrap();
    let approx = common::truncated_values(&mdp, &pi, 0.8, 200);
    assert!((v.get(0) - approx[0]).abs() <= 1e-9);
    assert!((v.get(1) - approx[1]).abs() <= 1e-9);
    let exact = evaluate_policy(&mdp, &pi, &ratio(4, 5)).unwrap();
    assert_eq!(rational_to_f64(exact.get(0)), 8.0);
    assert_eq!(rational_to_f64(exact.get(1)), 10.0);
}
