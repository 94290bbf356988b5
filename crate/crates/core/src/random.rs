//! Seeded pseudo-random trees and Markov models for property checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{AtomTree, Horizon, MarkovModel, NodeSpec};
use crate::scalar::Exact;

#[derive(Clone, Debug)]
pub struct TreeConfig {
    pub max_horizon: usize,
    pub max_branching: usize,
    /// Probability that a child of an in-domain atom stays in the domain.
    pub domain_prob: f64,
    /// Upper bound on atoms before the effective horizon.
    pub max_free: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_horizon: 4,
            max_branching: 3,
            domain_prob: 0.8,
            max_free: 20,
        }
    }
}

impl TreeConfig {
    /// Every atom in the domain.
    pub fn full_domain() -> Self {
        TreeConfig {
            domain_prob: 1.0,
            ..TreeConfig::default()
        }
    }
}

fn rational(num: i64, den: i64) -> Exact {
    Exact::new(num.into(), den.into())
}

fn random_weights(rng: &mut ChaCha8Rng, k: usize) -> Vec<Exact> {
    let w: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=6)).collect();
    let total: i64 = w.iter().sum();
    w.into_iter().map(|x| rational(x, total)).collect()
}

fn random_payoff(rng: &mut ChaCha8Rng) -> Exact {
    rational(rng.gen_range(0..=12), rng.gen_range(1..=3))
}

/// Random tree drawn from `seed`; redraws until the free-atom bound holds.
pub fn random_tree(seed: u64, config: &TreeConfig) -> AtomTree<Exact> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let tree = draw_tree(&mut rng, config);
        let free = tree.effective_horizon().iter().filter(|f| !**f).count();
        if free <= config.max_free {
            return tree;
        }
    }
}

fn draw_tree(rng: &mut ChaCha8Rng, config: &TreeConfig) -> AtomTree<Exact> {
    let horizon = rng.gen_range(1..=config.max_horizon);
    let mut nodes = vec![NodeSpec {
        name: "r".to_string(),
        parent: None,
        prob: rational(1, 1),
        in_domain: true,
        payoff: Some(random_payoff(rng)),
    }];
    let mut frontier = vec![(0usize, true)];
    for _ in 0..horizon {
        let mut next = Vec::new();
        for (idx, parent_in) in frontier {
            let k = rng.gen_range(1..=config.max_branching);
            let probs = random_weights(rng, k);
            let parent_name = nodes[idx].name.clone();
            for (c, prob) in probs.into_iter().enumerate() {
                let in_domain = parent_in && rng.gen_bool(config.domain_prob);
                nodes.push(NodeSpec {
                    name: format!("{parent_name}{c}"),
                    parent: Some(parent_name.clone()),
                    prob,
                    in_domain,
                    payoff: if in_domain {
                        Some(random_payoff(rng))
                    } else {
                        None
                    },
                });
                next.push((nodes.len() - 1, in_domain));
            }
        }
        frontier = next;
    }
    AtomTree::from_nodes(horizon, nodes).expect("generated tree is valid")
}

/// Random chain on four states: state 0 is the exit, states 1 to 3 form the
/// domain, the start is state 1 and the horizon lies in `1..=max_horizon`.
pub fn random_markov(seed: u64, max_horizon: usize) -> MarkovModel<Exact> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 4;
    let mut transition = vec![vec![rational(0, 1); n]; n];
    transition[0][0] = rational(1, 1);
    for row in transition.iter_mut().skip(1) {
        let support: Vec<usize> = loop {
            let s: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.6)).collect();
            if !s.is_empty() {
                break s;
            }
        };
        for (y, w) in support.iter().zip(random_weights(&mut rng, support.len())) {
            row[*y] = w;
        }
    }
    let payoff = (0..n)
        .map(|x| {
            if x == 0 {
                None
            } else {
                Some(random_payoff(&mut rng))
            }
        })
        .collect();
    let discount = rational(rng.gen_range(5..=10), 10);
    let horizon = rng.gen_range(1..=max_horizon);
    MarkovModel::new(
        (0..n).map(|x| x.to_string()).collect(),
        1,
        transition,
        vec![false, true, true, true],
        payoff,
        discount,
        Horizon::Finite(horizon),
    )
    .expect("generated chain is valid")
}
