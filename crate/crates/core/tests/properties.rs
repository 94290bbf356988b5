mod common;

use common::{equilibrium_value, q};
use condstop::examples::{binomial_tree, convert_tree, minnie_donald_default, two_state_default};
use condstop::infinite::{evaluate, PeriodicMarkovPolicy};
use condstop::io::{
    markov_to_json, pair_to_json, parse_model, parse_pair, parse_policy, tree_policy_to_json,
    tree_to_json, Model,
};
use condstop::policy::{is_equilibrium, phi, precommitted, DEFAULT_PRECOMMIT_GUARD};
use condstop::random::{random_markov, random_tree, TreeConfig};
use condstop::recursion::verify_snell_pair;
use condstop::scalar::parse_rational;
use condstop::{backward_solve, Exact, Float, Scalar};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn backward_policy_is_a_fixed_point(seed in any::<u64>()) {
        let tree = random_tree(seed, &TreeConfig::default());
        let sol = backward_solve(&tree);
        prop_assert_eq!(phi(&tree, &sol.policy).unwrap(), sol.policy.clone());
        prop_assert!(is_equilibrium(&tree, &sol.policy).unwrap().holds());
    }

    #[test]
    fn precommitment_dominates(seed in any::<u64>()) {
        let tree = random_tree(seed, &TreeConfig::default());
        let sol = backward_solve(&tree);
        let pre = precommitted(&tree, DEFAULT_PRECOMMIT_GUARD).unwrap();
        prop_assert!(pre.value >= equilibrium_value(&tree, &sol.policy));
        prop_assert!(pre.survival > q(0, 1) && pre.survival <= q(1, 1));
    }

    #[test]
    fn tree_and_pair_files_round_trip(seed in any::<u64>()) {
        let tree = random_tree(seed, &TreeConfig::default());
        let Model::Tree(back) = parse_model(&tree_to_json(&tree).to_string()).unwrap() else {
            panic!("expected a tree")
        };
        prop_assert_eq!(tree_to_json(&back), tree_to_json(&tree));
        let sol = backward_solve(&back);
        let pair = parse_pair::<Exact>(&pair_to_json(&back, &sol.pair).to_string(), &back).unwrap();
        prop_assert_eq!(&pair, &sol.pair);
        prop_assert!(verify_snell_pair(&back, &pair).unwrap().holds());
        let policy = parse_policy(&tree_policy_to_json(&back, &sol.policy).to_string()).unwrap();
        prop_assert_eq!(policy.to_tree_policy(&back, None).unwrap(), sol.policy);
    }

    #[test]
    fn markov_files_round_trip(seed in any::<u64>()) {
        let model = random_markov(seed, 6);
        let Model::Markov(back) = parse_model(&markov_to_json(&model).to_string()).unwrap() else {
            panic!("expected a chain")
        };
        prop_assert_eq!(markov_to_json(&back), markov_to_json(&model));
    }

    #[test]
    fn rationals_round_trip(n in -10_000i64..10_000, d in 1i64..10_000) {
        let x = q(n, d);
        prop_assert_eq!(parse_rational(&x.to_canonical_string()).unwrap(), x);
    }

    #[test]
    fn float_mode_tracks_exact(seed in any::<u64>()) {
        let tree = random_tree(seed, &TreeConfig::default());
        let exact = backward_solve(&tree);
        let float = backward_solve(&convert_tree::<Float>(&tree));
        for id in 0..tree.len() {
            let (a, b) = (exact.pair.s[id].to_f64(), float.pair.s[id].0);
            prop_assert!((a - b).abs() <= 1e-9);
            if let (Some(a), Some(b)) = (&exact.pair.v[id], &float.pair.v[id]) {
                prop_assert!((a.to_f64() - b.0).abs() <= 1e-9 * a.to_f64().abs().max(1.0));
            }
        }
        prop_assert!(verify_snell_pair(&convert_tree::<Float>(&tree), &float.pair).unwrap().holds());
    }
}

#[test]
fn default_epsilon() {
    assert_eq!(Float::epsilon().to_bits(), 1e-9f64.to_bits());
}

#[test]
fn float_mode_on_examples() {
    let tree = convert_tree::<Float>(&binomial_tree());
    let sol = backward_solve(&tree);
    assert!((sol.pair.v[0].unwrap().0 - 6.5).abs() < 1e-12);
    let pre = precommitted(&tree, DEFAULT_PRECOMMIT_GUARD).unwrap();
    assert!((pre.value.0 - 22.0 / 3.0).abs() < 1e-12);

    let model = condstop::examples::convert_model::<Float>(&two_state_default());
    let eval = evaluate(
        &model,
        &PeriodicMarkovPolicy::homogeneous(vec![true, false, true]),
    )
    .unwrap();
    assert!((eval.j[0][1].unwrap().0 - 36.0 / 35.0).abs() < 1e-12);

    let md = condstop::examples::convert_model::<Float>(&minnie_donald_default(1));
    let found = condstop::infinite::enumerate_periodic_equilibria(
        &md,
        4,
        condstop::infinite::PeriodicFilter::All,
        1 << 20,
    )
    .unwrap();
    assert_eq!(found.len(), 2);
}
