#![allow(dead_code)]

use condstop::policy::{is_equilibrium, StoppingPolicy};
use condstop::{AtomTree, Exact};

pub fn q(n: i64, d: i64) -> Exact {
    Exact::new(n.into(), d.into())
}

/// Every policy with stop bits on free atoms, filtered by the equilibrium
/// check. Exponential; small trees only.
pub fn literal_equilibria(tree: &AtomTree<Exact>) -> Vec<StoppingPolicy> {
    let flags = tree.effective_horizon();
    let free: Vec<usize> = (0..tree.len()).filter(|&i| !flags[i]).collect();
    assert!(free.len() <= 16, "tree too large for the literal oracle");
    let mut out = Vec::new();
    for mask in 0u32..(1 << free.len()) {
        let mut bits = vec![true; tree.len()];
        for (k, &id) in free.iter().enumerate() {
            bits[id] = mask >> k & 1 == 1;
        }
        let policy = StoppingPolicy::new(bits);
        if is_equilibrium(tree, &policy).unwrap().holds() {
            out.push(policy);
        }
    }
    out.sort();
    out
}

/// Path-by-path payoff mass and survival of the stopping time "first atom
/// of `stop_set` along the path", or `None` when some in-domain path reaches
/// the horizon without meeting the set.
pub fn first_hit(tree: &AtomTree<Exact>, stop_set: &[bool]) -> Option<(Exact, Exact)> {
    let probs = tree.unconditional_probs();
    let mut payoff = q(0, 1);
    let mut survival = q(0, 1);
    for &leaf in tree.level(tree.horizon()) {
        let mut path = vec![leaf];
        while let Some(p) = tree.atom(*path.last().unwrap()).parent {
            path.push(p);
        }
        path.reverse();
        match path
            .iter()
            .find(|&&a| !tree.atom(a).in_domain || stop_set[a])
        {
            Some(&a) if tree.atom(a).in_domain => {
                payoff += probs[leaf].clone() * tree.atom(a).payoff.clone().unwrap();
                survival += probs[leaf].clone();
            }
            Some(_) => {}
            None => return None,
        }
    }
    Some((payoff, survival))
}

/// Precommitted value by enumerating every subset of in-domain atoms.
pub fn brute_precommitted(tree: &AtomTree<Exact>) -> Exact {
    let domain: Vec<usize> = (0..tree.len())
        .filter(|&i| tree.atom(i).in_domain)
        .collect();
    assert!(domain.len() <= 18, "tree too large for the subset oracle");
    let mut best: Option<Exact> = None;
    for mask in 0u32..(1 << domain.len()) {
        let mut set = vec![false; tree.len()];
        for (k, &id) in domain.iter().enumerate() {
            set[id] = mask >> k & 1 == 1;
        }
        if let Some((num, den)) = first_hit(tree, &set) {
            if den > q(0, 1) {
                let v = num / den;
                if best.as_ref().is_none_or(|b| v > *b) {
                    best = Some(v);
                }
            }
        }
    }
    best.unwrap()
}

/// Time-0 value of an equilibrium: `G_0` if the root stops, else `J_0`.
pub fn equilibrium_value(tree: &AtomTree<Exact>, policy: &StoppingPolicy) -> Exact {
    if policy.stops(0) {
        tree.root().payoff.clone().unwrap()
    } else {
        condstop::policy::continuation_value(tree, policy, 0).unwrap()
    }
}
