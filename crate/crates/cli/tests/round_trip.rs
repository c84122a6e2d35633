use proptest::prelude::*;
use tvdisc::formats::{
    dynamic_policy_to_file, instance_to_file, parse_dynamic_policy, parse_instance, to_json,
};
use tvdisc_core::mdp::{Action, Mdp, StaticPolicy};
use tvdisc_core::scalar::ratio;
use tvdisc_core::spe::DynamicPolicy;
use tvdisc_core::{BigUint, DiscountFunction};

/// (reward numerator, reward denominator, weights over states) per action.
type Shape = Vec<Vec<(i64, i64, Vec<i64>)>>;

fn model_shape() -> impl Strategy<Value = Shape> {
    (1usize..4).prop_flat_map(|n| {
        proptest::collection::vec(
            proptest::collection::vec((-20i64..20, 1i64..7, proptest::collection::vec(0i64..4, n)), 1..4),
            n,
        )
    })
}

fn build(shape: &Shape) -> Mdp {
    let n = shape.len();
    let actions = shape
        .iter()
        .map(|list| {
            list.iter()
                .enumerate()
                .map(|(a, (p, q, w))| {
                    let mut w = w.clone();
                    if w.iter().all(|x| *x == 0) {
                        w[0] = 1;
                    }
                    let total: i64 = w.iter().sum();
                    Action::new(format!("act{a}"), ratio(*p, *q), w.iter().map(|x| ratio(*x, total)).collect())
                })
                .collect()
        })
        .collect();
    Mdp::new((0..n).map(|s| format!("state{s}")).collect(), actions, n - 1).unwrap()
}

fn discount() -> impl Strategy<Value = DiscountFunction> {
    let r = |hi: i64| (0..hi).prop_map(|k| ratio(k, 100));
    prop_oneof![
        r(100).prop_map(|g| DiscountFunction::constant(g).unwrap()),
        (r(100), 0u64..u64::MAX).prop_map(|(g, s)| DiscountFunction::down_step(g, BigUint::from(s) << 70usize).unwrap()),
        (r(100), r(100), 0u64..50).prop_map(|(a, b, s)| DiscountFunction::two_phase(a, b, BigUint::from(s)).unwrap()),
        (r(100), (1i64..50).prop_map(|k| ratio(k, 100)), (1i64..100).prop_map(|k| ratio(k, 100)))
            .prop_map(|(l, a, q)| DiscountFunction::geometric(l, a, q).unwrap()),
        (proptest::collection::vec(r(100), 0..5), r(100)).prop_map(|(v, t)| DiscountFunction::table(v, t).unwrap()),
    ]
}

proptest! {
    #[test]
    fn instances_round_trip(shape in model_shape(), g in proptest::option::of(discount())) {
        let mdp = build(&shape);
        let text = to_json(&instance_to_file(&mdp, g.as_ref()));
        let back = parse_instance(&text).unwrap();
        prop_assert_eq!(&back.mdp, &mdp);
        prop_assert_eq!(&back.discount, &g);
        prop_assert_eq!(to_json(&instance_to_file(&back.mdp, back.discount.as_ref())), text);
    }

    #[test]
    fn dynamic_policies_round_trip(shape in model_shape(), picks in proptest::collection::vec(any::<usize>(), 0..40)) {
        let mdp = build(&shape);
        let n = mdp.n_states();
        let policy = |offset: usize| {
            let choices = (0..n).map(|s| picks.get(offset + s).copied().unwrap_or(0) % mdp.actions(s).len()).collect();
            StaticPolicy::new(&mdp, choices).unwrap()
        };
        let len = picks.len() / n.max(1) / 2;
        let prefix = (0..len).map(|t| policy(t * n)).collect();
        let dp = DynamicPolicy::new(&mdp, prefix, policy(len * n)).unwrap();
        let text = to_json(&dynamic_policy_to_file(&mdp, &dp));
        let back = parse_dynamic_policy(&text, &mdp).unwrap();
        prop_assert_eq!(&back, &dp);
        prop_assert_eq!(to_json(&dynamic_policy_to_file(&mdp, &back)), text);
    }
}
