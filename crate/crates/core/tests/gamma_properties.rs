mod common;

use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tvdisc_core::gamma::{compute_gamma_set, value_rational, GammaSet, SeparationBound};
use tvdisc_core::mdp::{evaluate_policy, optimal_action_sets, policies_equivalent, Mdp, StaticPolicy};
use tvdisc_core::scalar::{rational_to_f64, ratio};
use tvdisc_core::{BigInt, BigRational, Settings};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

/// Optimal policies at an exact rational discount, with zero tolerance.
fn optimal_set(mdp: &Mdp, gamma: &BigRational) -> Vec<StaticPolicy> {
    let settings = Settings::default();
    optimal_action_sets(mdp, gamma, &ratio(0, 1), &settings).unwrap().policies()
}

fn single_class(mdp: &Mdp, policies: &[StaticPolicy]) -> bool {
    policies.iter().all(|p| policies_equivalent(mdp, &policies[0], p))
}

/// Uniform-ish rational strictly inside (lo, hi).
fn inside(rng: &mut ChaCha8Rng, lo: &BigRational, hi: &BigRational) -> BigRational {
    let k = rng.gen_range(1..1000);
    lo + (hi - lo) * ratio(k, 1000)
}

/// Consecutive Γ-free gaps, with the refined interval endpoints as borders.
fn gaps(gs: &GammaSet) -> Vec<(BigRational, BigRational)> {
    let mut borders = vec![ratio(0, 1)];
    for p in gs.points() {
        borders.push(p.lo().clone());
        borders.push(p.hi().clone());
    }
    borders.push(ratio(1, 1));
    borders.chunks(2).filter(|w| w[0] < w[1]).map(|w| (w[0].clone(), w[1].clone())).collect()
}

proptest! {
    #![proptest_config(config(20))]

    #[test]
    fn rational_values_agree_with_evaluation(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let mdp = common::random_mdp(&mut rng, 5, 3, 5);
        let pi = common::random_policy(&mut rng, &mdp);
        let functions: Vec<_> = (0..mdp.n_states()).map(|s| value_rational(&mdp, &pi, s).unwrap()).collect();
        for f in &functions {
            prop_assert!(f.numerator().degree().unwrap_or(0) <= mdp.n_states());
            prop_assert!(f.denominator().degree().unwrap_or(0) <= mdp.n_states());
        }
        for _ in 0..50 {
            let gamma = common::random_ratio(&mut rng, 0, 95, 100);
            let exact = evaluate_policy(&mdp, &pi, &gamma).unwrap();
            let float = evaluate_policy(&mdp, &pi, &rational_to_f64(&gamma)).unwrap();
            for (s, f) in functions.iter().enumerate() {
                let v = f.eval(&gamma).unwrap();
                prop_assert_eq!(&v, exact.get(s));
                prop_assert!((rational_to_f64(&v) - float.get(s)).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn gamma_points_are_degenerate_and_gaps_are_not(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let mdp = common::random_deterministic(&mut rng, 3, 2, 4);
        let settings = Settings::default();
        let mut gs = compute_gamma_set(&mdp, &settings).unwrap();
        gs.refine(&ratio(1, 1_000_000_000));
        for p in gs.points() {
            let (w1, w2) = &p.witnesses;
            prop_assert!(!policies_equivalent(&mdp, w1, w2));
            match p.number.as_rational() {
                Some(x) => {
                    let set = optimal_set(&mdp, x);
                    prop_assert!(set.contains(w1) && set.contains(w2));
                }
                None => {
                    let mid = p.approx();
                    let sets = optimal_action_sets(&mdp, &mid, &1e-6, &settings).unwrap();
                    prop_assert!(sets.contains(w1) && sets.contains(w2));
                }
            }
        }
        // One equivalence class per gap, shared by five samples.
        for (lo, hi) in gaps(&gs) {
            let samples: Vec<Vec<StaticPolicy>> =
                (0..5).map(|_| optimal_set(&mdp, &inside(&mut rng, &lo, &hi))).collect();
            let all: Vec<StaticPolicy> = samples.into_iter().flatten().collect();
            prop_assert!(single_class(&mdp, &all), "gap ({}, {})", lo, hi);
        }
    }

    #[test]
    fn exact_gap_respects_separation_bound(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let mdp = common::random_deterministic(&mut rng, 3, 2, 4);
        let gs = compute_gamma_set(&mdp, &Settings::default()).unwrap();
        let gap = gs.min_gap();
        let bound = SeparationBound::for_mdp(&mdp).unwrap();
        prop_assert!(gap > ratio(0, 1) && gap <= ratio(1, 1));
        prop_assert!(bound.is_below(&gap), "gap {} vs log2 D ≤ {}", gap, bound.log2_upper);
        prop_assert!(bound.log2_lower <= bound.log2_upper);
        prop_assert!(bound.log2_upper <= BigInt::from(0));
    }
}
