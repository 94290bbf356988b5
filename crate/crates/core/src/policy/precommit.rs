use std::cmp::Ordering;

use num_bigint::BigUint;
use num_traits::One;

use crate::error::SolveError;
use crate::model::{AtomId, AtomTree};
use crate::scalar::Scalar;

/// Largest number of stopping times [`precommitted`] accepts.
pub const DEFAULT_PRECOMMIT_GUARD: u64 = 10_000_000;

/// Optimal stopping time of the time-0 agent.
#[derive(Clone, Debug, PartialEq)]
pub struct Precommitted<S> {
    pub value: S,
    /// `E[G_τ 1{τ ⊲ σ}]`.
    pub payoff_mass: S,
    /// `P(τ ⊲ σ)`.
    pub survival: S,
    /// Atoms where the optimizer stops, in increasing id order.
    pub stop_atoms: Vec<AtomId>,
    /// Value of `τ` on every level-`T` atom, in id order. Paths that leave
    /// the domain before stopping carry `T`.
    pub levels: Vec<usize>,
}

impl<S: Scalar> Precommitted<S> {
    /// Value of the optimal stopping time on the path through `leaf`.
    pub fn level_at<T: Scalar>(&self, tree: &AtomTree<T>, leaf: AtomId) -> Option<usize> {
        let pos = tree
            .level(tree.horizon())
            .iter()
            .position(|&id| id == leaf)?;
        Some(self.levels[pos])
    }
}

#[derive(Clone, Debug)]
struct Candidate<S> {
    payoff_mass: S,
    survival: S,
    levels: Vec<usize>,
    stops: Vec<AtomId>,
}

/// Number of stopping times that can be chosen inside the subtree of each
/// atom, counting "stop here" once and every combination of child choices.
fn counts<S: Scalar>(tree: &AtomTree<S>) -> Vec<BigUint> {
    let mut out = vec![BigUint::one(); tree.len()];
    for id in (0..tree.len()).rev() {
        let atom = tree.atom(id);
        if atom.in_domain && !atom.children.is_empty() {
            let product = atom
                .children
                .iter()
                .fold(BigUint::one(), |acc, &c| acc * &out[c]);
            out[id] = product + 1u8;
        }
    }
    out
}

fn leaves_below<S: Scalar>(tree: &AtomTree<S>, id: AtomId) -> usize {
    tree.subtree(id)
        .into_iter()
        .filter(|&a| tree.atom(a).level == tree.horizon())
        .count()
}

fn stop_here<S: Scalar>(tree: &AtomTree<S>, id: AtomId) -> Candidate<S> {
    let atom = tree.atom(id);
    Candidate {
        payoff_mass: atom.payoff.clone().expect("stops are in the domain"),
        survival: S::one(),
        levels: vec![atom.level; leaves_below(tree, id)],
        stops: vec![id],
    }
}

/// All stopping times inside the subtree of `id`, conditional on `id`.
fn options<S: Scalar>(tree: &AtomTree<S>, id: AtomId) -> Vec<Candidate<S>> {
    let atom = tree.atom(id);
    if !atom.in_domain {
        return vec![Candidate {
            payoff_mass: S::zero(),
            survival: S::zero(),
            levels: vec![tree.horizon(); leaves_below(tree, id)],
            stops: Vec::new(),
        }];
    }
    let mut out = vec![stop_here(tree, id)];
    if atom.children.is_empty() {
        return out;
    }
    let children: Vec<(S, Vec<Candidate<S>>)> = tree
        .branches(id)
        .map(|(c, p)| (p.clone(), options(tree, c)))
        .collect();
    for_each_combination(&children, |c| out.push(c));
    out
}

/// Calls `visit` with every combination of one option per child, in
/// mixed-radix order with the first child varying slowest.
fn for_each_combination<S: Scalar>(
    children: &[(S, Vec<Candidate<S>>)],
    mut visit: impl FnMut(Candidate<S>),
) {
    let mut index = vec![0usize; children.len()];
    loop {
        let mut combined = Candidate {
            payoff_mass: S::zero(),
            survival: S::zero(),
            levels: Vec::new(),
            stops: Vec::new(),
        };
        for ((p, opts), &i) in children.iter().zip(&index) {
            let o = &opts[i];
            combined.payoff_mass = combined.payoff_mass + p.clone() * o.payoff_mass.clone();
            combined.survival = combined.survival + p.clone() * o.survival.clone();
            combined.levels.extend_from_slice(&o.levels);
            combined.stops.extend_from_slice(&o.stops);
        }
        visit(combined);
        let mut k = children.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            index[k] += 1;
            if index[k] < children[k].1.len() {
                break;
            }
            index[k] = 0;
        }
    }
}

/// Whether `a` beats `b`: larger value, then earlier stopping.
fn better<S: Scalar>(a: &Candidate<S>, b: &Candidate<S>) -> bool {
    let va = a.payoff_mass.clone() / a.survival.clone();
    let vb = b.payoff_mass.clone() / b.survival.clone();
    match va.compare(&vb) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => a.levels < b.levels,
    }
}

/// Maximizes `E[G_τ 1{τ ⊲ σ}] / P(τ ⊲ σ)` over all stopping times with
/// `P(τ ⊲ σ) > 0` by exhaustive enumeration.
///
/// Ties go to the stopping time whose vector of stopping levels over the
/// level-`T` atoms is lexicographically smallest.
pub fn precommitted<S: Scalar>(
    tree: &AtomTree<S>,
    guard: u64,
) -> Result<Precommitted<S>, SolveError> {
    let count = &counts(tree)[0];
    if *count > BigUint::from(guard) {
        return Err(SolveError::SizeGuard {
            count: count.to_string(),
            guard,
        });
    }
    let root = tree.root();
    let mut best = stop_here(tree, root.id);
    if !root.children.is_empty() {
        let children: Vec<(S, Vec<Candidate<S>>)> = tree
            .branches(root.id)
            .map(|(c, p)| (p.clone(), options(tree, c)))
            .collect();
        for_each_combination(&children, |c| {
            if c.survival.is_positive() && better(&c, &best) {
                best = c;
            }
        });
    }
    let mut stop_atoms = best.stops;
    stop_atoms.sort_unstable();
    Ok(Precommitted {
        value: best.payoff_mass.clone() / best.survival.clone(),
        payoff_mass: best.payoff_mass,
        survival: best.survival,
        stop_atoms,
        levels: best.levels,
    })
}
