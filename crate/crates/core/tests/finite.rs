mod common;

use common::{brute_precommitted, equilibrium_value, first_hit, literal_equilibria, q};
use condstop::examples::binomial_tree;
use condstop::policy::{
    continuation_value, enumerate_equilibria, is_equilibrium, phi, precommitted, EquilibriumFilter,
    StoppingPolicy, DEFAULT_ENUMERATION_GUARD, DEFAULT_PRECOMMIT_GUARD,
};
use condstop::random::{random_tree, TreeConfig};
use condstop::recursion::{
    classical_snell, pair_from_policy, policy_from_pair, survival_identities, verify_snell_pair,
};
use condstop::{backward_solve, AtomTree, Exact, StoppingPreference};

fn small(seed: u64) -> AtomTree<Exact> {
    random_tree(
        seed,
        &TreeConfig {
            max_free: 10,
            ..TreeConfig::default()
        },
    )
}

#[test]
fn binomial_numbers() {
    let tree = binomial_tree();
    let sol = backward_solve(&tree);
    assert_eq!(sol.pair.v[0], Some(q(13, 2)));
    assert!(!sol.policy.stops(0));
    let u = tree.find("u").unwrap();
    let d = tree.find("d").unwrap();
    assert_eq!(sol.pair.v[u], Some(q(10, 1)));
    assert_eq!(sol.pair.v[d], Some(q(3, 1)));
    assert_eq!(sol.pair.s[0], q(1, 1));

    let pre = precommitted(&tree, DEFAULT_PRECOMMIT_GUARD).unwrap();
    assert_eq!(pre.value, q(22, 3));
    assert_eq!(pre.value, brute_precommitted(&tree));
    assert!(pre.value > sol.pair.v[0].clone().unwrap());

    let all =
        enumerate_equilibria(&tree, &EquilibriumFilter::All, DEFAULT_ENUMERATION_GUARD).unwrap();
    assert_eq!(all, vec![sol.policy.clone()]);
    assert_eq!(literal_equilibria(&tree), all);
}

#[test]
fn binomial_precommitted_stopping_time() {
    let tree = binomial_tree();
    let pre = precommitted(&tree, DEFAULT_PRECOMMIT_GUARD).unwrap();
    for name in ["uu", "ud"] {
        assert_eq!(pre.level_at(&tree, tree.find(name).unwrap()), Some(1));
    }
    for name in ["du", "dd"] {
        assert_eq!(pre.level_at(&tree, tree.find(name).unwrap()), Some(2));
    }
    let mut set = vec![false; tree.len()];
    for &a in &pre.stop_atoms {
        set[a] = true;
    }
    let (num, den) = first_hit(&tree, &set).unwrap();
    assert_eq!(num / den, q(22, 3));
}

#[test]
fn enumeration_matches_literal_search() {
    for seed in 0..60 {
        let tree = small(seed);
        let all = enumerate_equilibria(&tree, &EquilibriumFilter::All, DEFAULT_ENUMERATION_GUARD)
            .unwrap();
        assert_eq!(all, literal_equilibria(&tree), "seed {seed}");
        let early = StoppingPreference::early(&tree);
        let preferred = enumerate_equilibria(
            &tree,
            &EquilibriumFilter::Preference(early),
            DEFAULT_ENUMERATION_GUARD,
        )
        .unwrap();
        assert_eq!(preferred, vec![backward_solve(&tree).policy], "seed {seed}");
    }
}

#[test]
fn late_preference_gives_an_equilibrium() {
    for seed in 0..60 {
        let tree = small(seed);
        let late = StoppingPreference::late(&tree);
        let found = enumerate_equilibria(
            &tree,
            &EquilibriumFilter::Preference(late.clone()),
            DEFAULT_ENUMERATION_GUARD,
        )
        .unwrap();
        assert!(!found.is_empty(), "seed {seed}");
        for policy in &found {
            assert!(is_equilibrium(&tree, policy).unwrap().holds());
        }
    }
}

#[test]
fn precommitted_matches_subset_search() {
    for seed in 0..60 {
        let tree = random_tree(
            seed,
            &TreeConfig {
                max_horizon: 3,
                max_branching: 2,
                ..TreeConfig::default()
            },
        );
        let pre = precommitted(&tree, DEFAULT_PRECOMMIT_GUARD).unwrap();
        assert_eq!(pre.value, brute_precommitted(&tree), "seed {seed}");
        assert_eq!(pre.value.clone() * pre.survival.clone(), pre.payoff_mass);
    }
}

#[test]
fn precommitment_dominates_every_equilibrium() {
    for seed in 0..60 {
        let tree = small(seed);
        let pre = precommitted(&tree, DEFAULT_PRECOMMIT_GUARD).unwrap();
        for policy in literal_equilibria(&tree) {
            assert!(
                pre.value >= equilibrium_value(&tree, &policy),
                "seed {seed}"
            );
        }
    }
}

#[test]
fn equilibria_are_fixed_points() {
    for seed in 0..60 {
        let tree = small(seed);
        let sol = backward_solve(&tree);
        assert_eq!(phi(&tree, &sol.policy).unwrap(), sol.policy);
        for id in 0..tree.len() {
            let s = &sol.pair.s[id];
            if tree.atom(id).in_domain {
                assert!(*s > q(0, 1) && *s <= q(1, 1), "seed {seed}");
            } else {
                assert_eq!(*s, q(0, 1));
            }
        }
    }
}

#[test]
fn snell_pair_and_round_trip() {
    for seed in 100..160 {
        let tree = random_tree(seed, &TreeConfig::default());
        let sol = backward_solve(&tree);
        let report = verify_snell_pair(&tree, &sol.pair).unwrap();
        assert!(report.holds(), "seed {seed}: {report:?}");
        assert!(survival_identities(&tree, &sol.policy, &sol.pair)
            .unwrap()
            .holds());
        let pair = pair_from_policy(&tree, &sol.policy).unwrap();
        assert_eq!(pair, sol.pair);
        assert_eq!(policy_from_pair(&tree, &pair).unwrap(), sol.policy);
    }
}

#[test]
fn corrupted_survival_is_rejected() {
    let tree = binomial_tree();
    let mut pair = backward_solve(&tree).pair;
    let d = tree.find("d").unwrap();
    pair.s[d] = q(3, 4);
    let report = verify_snell_pair(&tree, &pair).unwrap();
    assert!(!report.holds());
    let cited: Vec<_> = report
        .checks
        .iter()
        .filter(|c| !c.holds)
        .flat_map(|c| c.atoms.clone())
        .collect();
    assert!(cited.contains(&d) || cited.contains(&0));
}

/// Optimal classical stopping value by searching all first-hit stopping
/// times on a tree without exits.
fn classical_value(tree: &AtomTree<Exact>) -> Exact {
    let n = tree.len();
    assert!(n <= 18);
    let mut best: Option<Exact> = None;
    for mask in 0u32..(1 << n) {
        let set: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
        if let Some((num, den)) = first_hit(tree, &set) {
            assert_eq!(den, q(1, 1));
            if best.as_ref().is_none_or(|b| num > *b) {
                best = Some(num);
            }
        }
    }
    best.unwrap()
}

#[test]
fn full_domain_reduces_to_classical_stopping() {
    let config = TreeConfig {
        max_horizon: 3,
        max_branching: 2,
        ..TreeConfig::full_domain()
    };
    for seed in 0..50 {
        let tree = random_tree(seed, &config);
        let sol = backward_solve(&tree);
        assert!(sol.pair.s.iter().all(|s| *s == q(1, 1)));
        let g: Vec<Exact> = tree.payoffs().into_iter().map(Option::unwrap).collect();
        let envelope = classical_snell(&tree, &g);
        let v: Vec<Exact> = sol.pair.v.iter().cloned().map(Option::unwrap).collect();
        assert_eq!(v, envelope);
        assert_eq!(v[0], classical_value(&tree), "seed {seed}");
    }
}

#[test]
fn hand_built_tree_with_tie() {
    // Root payoff equals its continuation value; both bits are equilibria.
    let tree = AtomTree::builder(1)
        .root("r", q(2, 1))
        .node("a", "r", q(1, 2), Some(q(1, 1)))
        .node("b", "r", q(1, 2), Some(q(3, 1)))
        .build()
        .unwrap();
    let all =
        enumerate_equilibria(&tree, &EquilibriumFilter::All, DEFAULT_ENUMERATION_GUARD).unwrap();
    assert_eq!(all.len(), 2);
    assert!(backward_solve(&tree).policy.stops(0));
    let cont = StoppingPolicy::new(vec![false, true, true]);
    assert_eq!(continuation_value(&tree, &cont, 0).unwrap(), q(2, 1));
}

fn shifted_chain(shift: i64) -> AtomTree<Exact> {
    AtomTree::builder(2)
        .root("r", q(shift - 10, 1))
        .node("c", "r", q(1, 1), Some(q(shift - 1, 1)))
        .node("c0", "c", q(1, 4), Some(q(shift - 2, 1)))
        .node("c1", "c", q(3, 4), None)
        .build()
        .unwrap()
}

#[test]
fn snell_conditions_need_nonnegative_values() {
    let negative = shifted_chain(0);
    let positive = shifted_chain(10);
    let a = backward_solve(&negative);
    let b = backward_solve(&positive);
    assert_eq!(a.policy, b.policy);
    assert!(is_equilibrium(&negative, &a.policy).unwrap().holds());
    let report = verify_snell_pair(&negative, &a.pair).unwrap();
    assert!(!report.get("value_envelope").unwrap().holds);
    assert!(verify_snell_pair(&positive, &b.pair).unwrap().holds());
}
