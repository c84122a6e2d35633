mod common;

use proptest::prelude::*;
use tvdisc_core::mdp::{solve_valit, ValItInstance};
use tvdisc_core::reduction::{answer_spe_start, build_gadget, Method};
use tvdisc_core::scalar::ratio;
use tvdisc_core::{BigRational, BigUint, Settings};

proptest! {
    #![proptest_config(ProptestConfig { cases: 40, ..ProptestConfig::default() })]

    #[test]
    fn brute_and_exhaustive_agree(seed in any::<u64>(), horizon in 1u32..=2, half in any::<bool>()) {
        let mut rng = common::rng(seed);
        let mdp = common::random_mdp(&mut rng, 2, 2, 3);
        let gamma = if half { ratio(1, 2) } else { ratio(3, 4) };
        let settings = Settings::default();
        for a in 0..mdp.actions(mdp.start()).len() {
            let inst = ValItInstance::new(mdp.clone(), gamma.clone(), a, BigUint::from(horizon)).unwrap();
            let gadget = build_gadget(&inst).unwrap();
            let brute = answer_spe_start(&gadget, Method::Brute, &settings).unwrap();
            let exhaustive = answer_spe_start(&gadget, Method::Exhaustive, &settings).unwrap();
            prop_assert_eq!(brute.answer, exhaustive.answer);
            prop_assert_eq!(brute.answer, solve_valit::<BigRational>(&inst, &settings).unwrap());
            // A constructed yes is always a real yes.
            let constructed = answer_spe_start(&gadget, Method::Constructed, &settings).unwrap();
            prop_assert!(!constructed.answer || brute.answer);
        }
    }

    #[test]
    fn gadget_rows_are_stochastic(seed in any::<u64>(), horizon in 1u32..6) {
        let mut rng = common::rng(seed);
        let mdp = common::random_mdp(&mut rng, 3, 2, 4);
        let inst = ValItInstance::new(mdp.clone(), ratio(3, 4), 0, BigUint::from(horizon)).unwrap();
        let gadget = build_gadget(&inst).unwrap();
        prop_assert_eq!(gadget.mdp.n_states(), mdp.n_states() + 2);
        for s in 0..gadget.mdp.n_states() {
            for action in gadget.mdp.actions(s) {
                let total: BigRational = action.transition.iter().cloned().sum();
                prop_assert_eq!(total, ratio(1, 1));
            }
        }
        for s in 0..mdp.n_states() {
            for (a, action) in mdp.actions(s).iter().enumerate() {
                let copy = gadget.mdp.action(s, a);
                prop_assert_eq!(&copy.reward, &action.reward);
                prop_assert_eq!(&copy.transition[..mdp.n_states()], &action.transition[..]);
            }
        }
    }
}
