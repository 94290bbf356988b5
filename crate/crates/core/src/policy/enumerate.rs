use std::cmp::Ordering;

use num_bigint::BigUint;

use super::{aggregate, is_equilibrium, Continuation, StoppingPolicy, StoppingPreference};
use crate::error::SolveError;
use crate::model::{AtomId, AtomTree};
use crate::scalar::Scalar;

/// Largest number of candidate policies [`enumerate_equilibria`] accepts.
pub const DEFAULT_ENUMERATION_GUARD: u64 = 1 << 20;

/// Which equilibria to return.
#[derive(Clone, Debug)]
pub enum EquilibriumFilter {
    /// Every equilibrium; indifferent agents may do either.
    All,
    /// Only equilibria in which indifferent agents follow the preference.
    Preference(StoppingPreference),
}

/// Lists all equilibrium policies of a finite tree.
///
/// Atoms at or past the effective horizon are fixed to stop, leaving one
/// free bit per earlier atom. Free atoms are assigned from the deepest level
/// upwards so every continuation value is known when its agent decides;
/// branches that contradict the best response are cut.
pub fn enumerate_equilibria<S: Scalar>(
    tree: &AtomTree<S>,
    filter: &EquilibriumFilter,
    guard: u64,
) -> Result<Vec<StoppingPolicy>, SolveError> {
    let flags = tree.effective_horizon();
    let free: Vec<AtomId> = (0..tree.len()).rev().filter(|&id| !flags[id]).collect();
    let candidates = BigUint::from(1u8) << free.len();
    if candidates > BigUint::from(guard) {
        return Err(SolveError::SizeGuard {
            count: candidates.to_string(),
            guard,
        });
    }

    let mut search = Search {
        tree,
        filter,
        free: &free,
        policy: StoppingPolicy::stop_everywhere(tree),
        table: vec![
            Continuation {
                payoff_mass: S::zero(),
                survival: S::zero(),
                never: S::zero()
            };
            tree.len()
        ],
        found: Vec::new(),
    };
    search.run(0);
    let mut found = search.found;
    found.sort();
    for policy in &found {
        debug_assert!(is_equilibrium(tree, policy)?.holds());
    }
    Ok(found)
}

struct Search<'a, S> {
    tree: &'a AtomTree<S>,
    filter: &'a EquilibriumFilter,
    free: &'a [AtomId],
    policy: StoppingPolicy,
    table: Vec<Continuation<S>>,
    found: Vec<StoppingPolicy>,
}

impl<S: Scalar> Search<'_, S> {
    fn run(&mut self, k: usize) {
        let Some(&id) = self.free.get(k) else {
            self.found.push(self.policy.clone());
            return;
        };
        let cont = aggregate(self.tree, &self.policy, &self.table, id);
        let Some(j) = cont.value() else { return };
        self.table[id] = cont;
        let g = self
            .tree
            .atom(id)
            .payoff
            .as_ref()
            .expect("free atoms are in the domain");
        let choices: &[bool] = match g.compare(&j) {
            Ordering::Greater => &[true],
            Ordering::Less => &[false],
            Ordering::Equal => match self.filter {
                EquilibriumFilter::All => &[false, true],
                EquilibriumFilter::Preference(pref) => {
                    if pref.prefers_stop(id) {
                        &[true]
                    } else {
                        &[false]
                    }
                }
            },
        };
        for &bit in choices {
            self.policy.set(id, bit);
            self.run(k + 1);
        }
        self.policy.set(id, true);
    }
}
