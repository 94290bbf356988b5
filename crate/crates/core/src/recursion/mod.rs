//! Backward recursion for finite-horizon equilibria and Snell pairs.

mod verify;

pub use verify::{survival_identities, verify_snell_pair, Check, Report};

use std::cmp::Ordering;

use crate::error::SolveError;
use crate::model::AtomTree;
use crate::policy::{continuation_table, is_equilibrium, StoppingPolicy};
use crate::scalar::Scalar;

/// Value process `V` and survival process `S`, one entry per atom.
///
/// `v` is `None` exactly on atoms outside the domain, where `V = G = Δ`.
#[derive(Clone, Debug, PartialEq)]
pub struct SnellPair<S> {
    pub v: Vec<Option<S>>,
    pub s: Vec<S>,
}

impl<S: Scalar> SnellPair<S> {
    /// `S·V` with the convention `0·Δ = 0`.
    pub fn product(&self, id: usize) -> S {
        match &self.v[id] {
            Some(v) if !self.s[id].is_zero() => self.s[id].clone() * v.clone(),
            _ => S::zero(),
        }
    }
}

/// Output of [`backward_solve`].
#[derive(Clone, Debug, PartialEq)]
pub struct BackwardSolution<S> {
    pub pair: SnellPair<S>,
    pub policy: StoppingPolicy,
    /// `J_t` on atoms before the effective horizon.
    pub continuation: Vec<Option<S>>,
}

/// `(E[S'V' | A], E[S' | A])` over the children of `id`, skipping atoms with
/// `S' = 0`.
pub(crate) fn one_step<S: Scalar>(tree: &AtomTree<S>, pair: &SnellPair<S>, id: usize) -> (S, S) {
    tree.branches(id)
        .fold((S::zero(), S::zero()), |(num, den), (c, p)| {
            if pair.s[c].is_zero() {
                (num, den)
            } else {
                (
                    num + p.clone() * pair.product(c),
                    den + p.clone() * pair.s[c].clone(),
                )
            }
        })
}

/// Computes the unique equilibrium with early stopping preference together
/// with its Snell pair, level by level from the horizon.
pub fn backward_solve<S: Scalar>(tree: &AtomTree<S>) -> BackwardSolution<S> {
    let n = tree.len();
    let flags = tree.effective_horizon();
    let mut pair = SnellPair {
        v: vec![None; n],
        s: vec![S::zero(); n],
    };
    let mut continuation = vec![None; n];
    let mut decisions = vec![true; n];
    for id in (0..n).rev() {
        let atom = tree.atom(id);
        if flags[id] {
            pair.v[id] = atom.payoff.clone();
            pair.s[id] = if atom.in_domain { S::one() } else { S::zero() };
            continue;
        }
        let g = atom
            .payoff
            .clone()
            .expect("atoms before the effective horizon are in the domain");
        let (num, den) = one_step(tree, &pair, id);
        let j = num / den.clone();
        if g.compare(&j) == Ordering::Less {
            pair.v[id] = Some(j.clone());
            pair.s[id] = den;
            decisions[id] = false;
        } else {
            pair.v[id] = Some(g);
            pair.s[id] = S::one();
        }
        continuation[id] = Some(j);
    }
    BackwardSolution {
        pair,
        policy: StoppingPolicy::new(decisions),
        continuation,
    }
}

/// Classical Snell envelope: `Y_T = X_T`, `Y_t = max(X_t, E[Y_{t+1} | F_t])`.
pub fn classical_snell<S: Scalar>(tree: &AtomTree<S>, process: &[S]) -> Vec<S> {
    let mut out = process.to_vec();
    for id in (0..tree.len()).rev() {
        if !tree.atom(id).children.is_empty() {
            let next = tree.conditional_expectation(id, &out);
            out[id] = process[id].clone().max_of(next);
        }
    }
    out
}

/// Freezes a process at the effective horizon: every atom past `T_e` takes
/// the value of the atom where `T_e` was reached.
pub fn stopped_at_effective_horizon<S: Scalar>(tree: &AtomTree<S>, process: &[S]) -> Vec<S> {
    let flags = tree.effective_horizon();
    let mut out = process.to_vec();
    for atom in tree.atoms() {
        if let Some(p) = atom.parent {
            if flags[p] {
                out[atom.id] = out[p].clone();
            }
        }
    }
    out
}

/// Builds the Snell pair of an equilibrium with early stopping preference.
pub fn pair_from_policy<S: Scalar>(
    tree: &AtomTree<S>,
    policy: &StoppingPolicy,
) -> Result<SnellPair<S>, SolveError> {
    let policy = policy.normalized(tree);
    let check = is_equilibrium(tree, &policy)?;
    if !check.holds() {
        let atom = check
            .violations
            .first()
            .map(|v| v.atom)
            .or_else(|| check.deviating.first().copied())
            .expect("failed check names an atom");
        return Err(SolveError::NotEarlyEquilibrium(tree.name(atom).to_string()));
    }
    let flags = tree.effective_horizon();
    let table = continuation_table(tree, &policy);
    let n = tree.len();
    let mut pair = SnellPair {
        v: vec![None; n],
        s: vec![S::zero(); n],
    };
    for atom in tree.atoms() {
        let id = atom.id;
        if flags[id] {
            pair.v[id] = atom.payoff.clone();
            pair.s[id] = if atom.in_domain { S::one() } else { S::zero() };
            continue;
        }
        let g = atom.payoff.clone().expect("in domain");
        let j = table[id].value().expect("admissible");
        match g.compare(&j) {
            Ordering::Less => {
                pair.v[id] = Some(j);
                pair.s[id] = table[id].survival.clone();
            }
            Ordering::Equal if !policy.stops(id) => {
                return Err(SolveError::NotEarlyEquilibrium(atom.name.clone()));
            }
            _ => {
                pair.v[id] = Some(g);
                pair.s[id] = S::one();
            }
        }
    }
    Ok(pair)
}

/// Reads off the policy `θ = 1{G ≥ V}` from a verified Snell pair.
pub fn policy_from_pair<S: Scalar>(
    tree: &AtomTree<S>,
    pair: &SnellPair<S>,
) -> Result<StoppingPolicy, SolveError> {
    let report = verify_snell_pair(tree, pair)?;
    if let Some(failed) = report.checks.iter().find(|c| !c.holds) {
        return Err(SolveError::UnverifiedPair(failed.name.to_string()));
    }
    Ok(StoppingPolicy::from_fn(tree, |atom| {
        match (&atom.payoff, &pair.v[atom.id]) {
            (Some(g), Some(v)) => g.compare(v) != Ordering::Less,
            _ => true,
        }
    }))
}
