mod common;

use std::collections::BTreeMap;

use common::q;
use condstop::examples::{
    minnie_donald, minnie_donald_default, minnie_donald_regions, minnie_donald_theta, two_state,
    two_state_default, two_state_with_row,
};
use condstop::infinite::{
    agree_on_reachable, check_growth, check_minnie_donald_conditions,
    enumerate_periodic_equilibria, evaluate, periodic_deviations, phi_markov, solve_markov_finite,
    truncation_limit, PeriodicFilter, PeriodicMarkovPolicy,
};
use condstop::policy::{continuation_table, StoppingPolicy};
use condstop::random::random_markov;
use condstop::{backward_solve, unroll, Exact, Horizon, MarkovModel, ModelError, SolveError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn stop_at(n: usize, set: &[usize]) -> PeriodicMarkovPolicy {
    PeriodicMarkovPolicy::from_sets(n, &[set.to_vec()])
}

#[test]
fn two_state_continuation_formulas() {
    let rows = [
        [q(1, 3), q(1, 3), q(1, 3)],
        [q(1, 2), q(0, 1), q(1, 2)],
        [q(1, 10), q(7, 10), q(1, 5)],
    ];
    for (delta, a) in [
        (q(9, 10), q(6, 5)),
        (q(1, 2), q(5, 4)),
        (q(4, 5), q(3, 1)),
        (q(99, 100), q(7, 6)),
    ] {
        for row in rows.clone() {
            let model = two_state_with_row(delta.clone(), a.clone(), row);
            let all = evaluate(&model, &stop_at(3, &[0, 1, 2])).unwrap();
            assert_eq!(
                all.j[0][1],
                Some(delta.clone() * (q(1, 1) + a.clone()) / q(2, 1))
            );
            let at_two = evaluate(&model, &stop_at(3, &[0, 2])).unwrap();
            assert_eq!(at_two.p[0][1], q(1, 2));
            assert_eq!(
                at_two.j[0][1],
                Some(q(2, 1) * a.clone() * delta.clone() / (q(3, 1) - delta.clone()))
            );
        }
    }
}

#[test]
fn two_state_canonical_instance() {
    let model = two_state_default();
    let all = evaluate(&model, &stop_at(3, &[0, 1, 2])).unwrap();
    let at_two = evaluate(&model, &stop_at(3, &[0, 2])).unwrap();
    assert_eq!(all.j[0][1], Some(q(99, 100)));
    assert_eq!(at_two.j[0][1], Some(q(36, 35)));
    assert!(q(36, 35) > q(1, 1) && q(1, 1) > q(99, 100));

    let found = enumerate_periodic_equilibria(&model, 1, PeriodicFilter::All, 1 << 20).unwrap();
    assert_eq!(found.len(), 2);
    assert!(found
        .iter()
        .any(|e| agree_on_reachable(&model, &e.policy, &stop_at(3, &[0, 1, 2]))));
    assert!(found
        .iter()
        .any(|e| agree_on_reachable(&model, &e.policy, &stop_at(3, &[0, 2]))));
    for e in &found {
        assert!(periodic_deviations(&model, &e.policy).unwrap().is_empty());
        assert_eq!(
            phi_markov(&model, &e.policy).unwrap(),
            e.policy.normalized(&model)
        );
    }

    let report = truncation_limit(&model, 12, 3).unwrap();
    assert!(report.stable());
    assert!(agree_on_reachable(
        &model,
        report.candidate.as_ref().unwrap(),
        &stop_at(3, &[0, 1, 2])
    ));
}

#[test]
fn two_state_interval_endpoints() {
    // For a inside (7/6, 11/9) at discount 9/10 both strict classifications hold.
    for a in [q(6, 5), q(59, 50), q(121, 100)] {
        let model = two_state(q(9, 10), a.clone());
        let found = enumerate_periodic_equilibria(&model, 1, PeriodicFilter::All, 1 << 20).unwrap();
        assert_eq!(found.len(), 2, "a = {a}");
    }
}

#[test]
fn minnie_donald_conditions_hold() {
    let conditions = check_minnie_donald_conditions(&q(999, 1000), &q(96, 100), &q(4257, 1000));
    assert_eq!(conditions.len(), 6);
    assert!(conditions.iter().all(|c| c.holds), "{conditions:?}");
    let broken = check_minnie_donald_conditions(&q(999, 1000), &q(96, 100), &q(5, 1));
    assert!(broken.iter().any(|c| !c.holds));
}

#[test]
fn minnie_donald_census() {
    for initial in [1, 2] {
        let model = minnie_donald_default(initial);
        assert!(
            enumerate_periodic_equilibria(&model, 1, PeriodicFilter::All, 1 << 20)
                .unwrap()
                .is_empty()
        );
        assert!(
            enumerate_periodic_equilibria(&model, 2, PeriodicFilter::All, 1 << 20)
                .unwrap()
                .is_empty()
        );
        let found = enumerate_periodic_equilibria(&model, 4, PeriodicFilter::All, 1 << 20).unwrap();
        assert_eq!(found.len(), 2);
        for i in 1..=4 {
            let theta = minnie_donald_theta(i);
            assert!(periodic_deviations(&model, &theta).unwrap().is_empty());
            assert!(found
                .iter()
                .any(|e| agree_on_reachable(&model, &e.policy, &theta)));
        }
        let pairs = if initial == 1 {
            [(1, 4), (2, 3)]
        } else {
            [(1, 2), (3, 4)]
        };
        for (i, j) in pairs {
            assert!(agree_on_reachable(
                &model,
                &minnie_donald_theta(i),
                &minnie_donald_theta(j)
            ));
        }
        assert!(!agree_on_reachable(
            &model,
            &minnie_donald_theta(1),
            &minnie_donald_theta(3)
        ));
    }
}

#[test]
fn minnie_donald_phi_rotates_regions() {
    let model = minnie_donald_default(1);
    let regions = minnie_donald_regions();
    for n in 0..4 {
        let start = PeriodicMarkovPolicy::homogeneous(regions[n].clone());
        let once = phi_markov(&model, &start).unwrap();
        let twice = phi_markov(&model, &once).unwrap();
        let expected = PeriodicMarkovPolicy::homogeneous(regions[(n + 2) % 4].clone());
        assert!(agree_on_reachable(&model, &twice, &expected), "R{}", n + 1);
        assert!(!agree_on_reachable(&model, &start, &once));
    }
}

#[test]
fn minnie_donald_best_responses() {
    // Each agent at state 1 or 2 answers the agent of the other type one step later.
    for initial in [1, 2] {
        let model = minnie_donald_default(initial);
        for mask in 0u32..256 {
            let regions: Vec<Vec<bool>> = (0..4)
                .map(|phi| {
                    (0..5)
                        .map(|x| match x {
                            1 => mask >> phi & 1 == 1,
                            2 => mask >> (phi + 4) & 1 == 1,
                            _ => true,
                        })
                        .collect()
                })
                .collect();
            let theta = PeriodicMarkovPolicy::new(regions);
            let Ok(eval) = evaluate(&model, &theta) else {
                continue;
            };
            let updated = phi_markov(&model, &theta).unwrap();
            for phi in 0..4 {
                let next = (phi + 1) % 4;
                if eval.j[phi][2].is_some() {
                    assert_eq!(
                        updated.stops(phi, 2),
                        theta.stops(next, 1),
                        "mask {mask} phase {phi}"
                    );
                }
                if eval.j[phi][1].is_some() {
                    assert_eq!(
                        updated.stops(phi, 1),
                        !theta.stops(next, 2),
                        "mask {mask} phase {phi}"
                    );
                }
            }
        }
    }
}

#[test]
fn minnie_donald_truncation_finds_period_four() {
    let model = minnie_donald_default(1);
    let report = truncation_limit(&model, 40, 3).unwrap();
    assert!(report.stable());
    assert_eq!(report.verified, Some(true));
    let candidate = report.candidate.unwrap();
    assert_eq!(candidate.period(), 4);
    assert!((1..=4).any(|i| agree_on_reachable(&model, &candidate, &minnie_donald_theta(i))));
}

/// Iterates the one-step recursions from zero. `q` is the probability of
/// exiting before the next stop; never stopping inside the domain counts as
/// survival.
fn value_iteration(
    model: &MarkovModel<Exact>,
    policy: &PeriodicMarkovPolicy,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let policy = policy.normalized(model);
    let n = model.n_states();
    let period = policy.period();
    let f = |x: &Exact| condstop::Scalar::to_f64(x);
    let delta = f(model.discount());
    let (mut h, mut q) = (vec![vec![0.0; n]; period], vec![vec![0.0; n]; period]);
    for _ in 0..20_000 {
        let (mut h2, mut q2) = (vec![vec![0.0; n]; period], vec![vec![0.0; n]; period]);
        for phi in 0..period {
            let next = (phi + 1) % period;
            for x in (0..n).filter(|&x| model.in_domain(x)) {
                for y in 0..n {
                    let pr = f(model.prob(x, y));
                    if !model.in_domain(y) {
                        q2[phi][x] += pr;
                    } else if policy.stops(next, y) {
                        h2[phi][x] += delta * pr * f(model.g(y).unwrap());
                    } else {
                        h2[phi][x] += delta * pr * h[next][y];
                        q2[phi][x] += pr * q[next][y];
                    }
                }
            }
        }
        h = h2;
        q = q2;
    }
    let p = q
        .iter()
        .map(|row| row.iter().map(|v| 1.0 - v).collect())
        .collect();
    (h, p)
}

#[test]
fn evaluation_matches_value_iteration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    for seed in 0..40 {
        let model = random_markov(seed, 4)
            .with_horizon(Horizon::Infinite)
            .unwrap();
        let period = rng.gen_range(1..=2);
        let regions = (0..period)
            .map(|_| (0..4).map(|_| rng.gen_bool(0.5)).collect())
            .collect();
        let policy = PeriodicMarkovPolicy::new(regions);
        let eval = match evaluate(&model, &policy) {
            Ok(e) => e,
            Err(SolveError::NotTransient | SolveError::PeriodicInadmissible { .. }) => continue,
            Err(e) => panic!("seed {seed}: {e}"),
        };
        let (h, p) = value_iteration(&model, &policy);
        for phi in 0..period {
            for x in 1..4 {
                let pe = condstop::Scalar::to_f64(&eval.p[phi][x]);
                assert!(
                    (pe - p[phi][x]).abs() < 1e-6,
                    "seed {seed}: p {pe} vs {}",
                    p[phi][x]
                );
                if let Some(he) = &eval.h[phi][x] {
                    let he = condstop::Scalar::to_f64(he);
                    assert!(
                        (he - h[phi][x]).abs() < 1e-6,
                        "seed {seed}: h {he} vs {}",
                        h[phi][x]
                    );
                }
            }
        }
        checked += 1;
    }
    assert!(checked >= 20);
}

#[test]
fn survival_brackets_truncated_tree() {
    let model = two_state_default();
    let policy = stop_at(3, &[0, 2]);
    let eval = evaluate(&model, &policy).unwrap();
    for depth in [3, 6] {
        let tree = unroll(&model, depth).unwrap();
        let mut bits =
            StoppingPolicy::from_fn(&tree, |a| a.state.is_none_or(|x| policy.stops(a.level, x)));
        bits.set(0, false);
        let table = continuation_table(&tree, &bits);
        let lower = table[0].survival.clone();
        let upper = lower.clone() + table[0].never.clone();
        assert!(
            lower <= eval.p[0][1] && eval.p[0][1] <= upper,
            "depth {depth}"
        );
    }
}

#[test]
fn markov_structure_on_unrolled_trees() {
    for seed in 0..25 {
        let model = random_markov(seed, 6);
        let Horizon::Finite(t) = model.horizon() else {
            unreachable!()
        };
        let tree = unroll(&model, t).unwrap();
        let sol = backward_solve(&tree);
        let mut seen: BTreeMap<(usize, Option<usize>, bool), (bool, Option<Exact>, Exact)> =
            BTreeMap::new();
        for atom in tree.atoms() {
            let key = (
                atom.level,
                atom.state.filter(|_| atom.in_domain),
                atom.in_domain,
            );
            let value = (
                sol.policy.stops(atom.id),
                sol.pair.v[atom.id].clone(),
                sol.pair.s[atom.id].clone(),
            );
            let prev = seen.entry(key).or_insert_with(|| value.clone());
            assert_eq!(*prev, value, "seed {seed}");
        }
        let finite = solve_markov_finite(&model, t);
        for atom in tree.atoms().iter().filter(|a| a.in_domain) {
            let x = atom.state.unwrap();
            assert_eq!(finite.stop[atom.level][x], sol.policy.stops(atom.id));
            assert_eq!(finite.s[atom.level][x], sol.pair.s[atom.id]);
        }
    }
}

#[test]
fn undiscounted_trap_is_not_transient() {
    let model = MarkovModel::new(
        vec!["0".into(), "1".into(), "2".into()],
        2,
        vec![
            vec![q(1, 1), q(0, 1), q(0, 1)],
            vec![q(0, 1), q(1, 1), q(0, 1)],
            vec![q(1, 2), q(1, 2), q(0, 1)],
        ],
        vec![false, true, true],
        vec![None, Some(q(1, 1)), Some(q(0, 1))],
        q(1, 1),
        Horizon::Infinite,
    )
    .unwrap();
    assert_eq!(
        evaluate(&model, &stop_at(3, &[0])).unwrap_err(),
        SolveError::NotTransient
    );
    let ok = evaluate(&model, &stop_at(3, &[0, 1])).unwrap();
    assert_eq!(ok.j[0][2], Some(q(1, 1)));
    assert_eq!(ok.p[0][2], q(1, 2));
}

#[test]
fn stationary_evaluation_rejects_bad_models() {
    let finite = two_state_default()
        .with_horizon(Horizon::Finite(3))
        .unwrap();
    assert_eq!(
        evaluate(&finite, &stop_at(3, &[0, 1, 2])).unwrap_err(),
        SolveError::Model(ModelError::FiniteHorizon)
    );
    let timed = two_state_default().with_time_payoff(2, 1, q(5, 1)).unwrap();
    assert_eq!(
        evaluate(&timed, &stop_at(3, &[0, 1, 2])).unwrap_err(),
        SolveError::Model(ModelError::TimeDependentPayoff)
    );
}

#[test]
fn growth_condition() {
    let model = two_state_default();
    assert!(check_growth(&model, &q(21, 20)).unwrap());
    assert!(check_growth(&model, &q(2, 1)).is_ok());
    assert!(check_growth(&model, &q(1, 1)).is_err());
    let negative = MarkovModel::new(
        vec!["0".into(), "1".into()],
        1,
        vec![vec![q(1, 1), q(0, 1)], vec![q(1, 2), q(1, 2)]],
        vec![false, true],
        vec![None, Some(q(-1, 1))],
        q(9, 10),
        Horizon::Infinite,
    )
    .unwrap();
    assert!(!check_growth(&negative, &q(21, 20)).unwrap());
    assert!(check_growth(
        &minnie_donald(q(1, 2), q(96, 100), q(4257, 1000), 1),
        &q(3, 2)
    )
    .unwrap());
}
