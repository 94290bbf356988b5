//! Stopping policies on atom trees: induced stopping times, admissibility,
//! continuation values, the best-response map and equilibrium checks.

mod enumerate;
mod precommit;

pub use enumerate::{enumerate_equilibria, EquilibriumFilter, DEFAULT_ENUMERATION_GUARD};
pub use precommit::{precommitted, Precommitted, DEFAULT_PRECOMMIT_GUARD};

use std::cmp::Ordering;

use crate::error::SolveError;
use crate::model::{AtomId, AtomTree};
use crate::scalar::Scalar;

/// One stop (`true`) or continue (`false`) bit per atom.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StoppingPolicy {
    decisions: Vec<bool>,
}

impl StoppingPolicy {
    pub fn new(decisions: Vec<bool>) -> Self {
        StoppingPolicy { decisions }
    }

    pub fn from_fn<S: Scalar>(
        tree: &AtomTree<S>,
        f: impl Fn(&crate::model::Atom<S>) -> bool,
    ) -> Self {
        StoppingPolicy {
            decisions: tree.atoms().iter().map(f).collect(),
        }
    }

    pub fn stop_everywhere<S: Scalar>(tree: &AtomTree<S>) -> Self {
        StoppingPolicy {
            decisions: vec![true; tree.len()],
        }
    }

    pub fn stops(&self, id: AtomId) -> bool {
        self.decisions[id]
    }

    pub fn set(&mut self, id: AtomId, stop: bool) {
        self.decisions[id] = stop;
    }

    pub fn decisions(&self) -> &[bool] {
        &self.decisions
    }

    pub fn len(&self) -> usize {
        self.decisions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decisions.is_empty()
    }

    /// Sets every atom strictly past the effective horizon to stop.
    pub fn normalized<S: Scalar>(&self, tree: &AtomTree<S>) -> Self {
        let flags = tree.effective_horizon();
        let mut out = self.clone();
        for atom in tree.atoms() {
            if atom.parent.is_some_and(|p| flags[p]) {
                out.decisions[atom.id] = true;
            }
        }
        out
    }

    pub(crate) fn check_shape<S: Scalar>(&self, tree: &AtomTree<S>) -> Result<(), SolveError> {
        if self.decisions.len() != tree.len() {
            return Err(SolveError::PolicyShape {
                expected: tree.len(),
                got: self.decisions.len(),
            });
        }
        Ok(())
    }
}

/// The choice an indifferent agent makes, one bit per atom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StoppingPreference {
    prefer_stop: Vec<bool>,
}

impl StoppingPreference {
    /// Indifferent agents stop.
    pub fn early<S: Scalar>(tree: &AtomTree<S>) -> Self {
        StoppingPreference {
            prefer_stop: vec![true; tree.len()],
        }
    }

    /// Indifferent agents continue.
    pub fn late<S: Scalar>(tree: &AtomTree<S>) -> Self {
        StoppingPreference {
            prefer_stop: vec![false; tree.len()],
        }
    }

    pub fn new(prefer_stop: Vec<bool>) -> Self {
        StoppingPreference { prefer_stop }
    }

    pub fn prefers_stop(&self, id: AtomId) -> bool {
        self.prefer_stop[id]
    }
}

/// How a path leaving an atom ends under a policy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StopOutcome {
    /// The policy stops at `atom` while still in the domain.
    Stop { atom: AtomId, level: usize },
    /// The path leaves the domain at `level` before any stop.
    Exit { level: usize },
    /// The tree ends without a stop or an exit.
    Never,
}

/// Path-by-path description of the continuation stopping time of an atom.
#[derive(Clone, Debug)]
pub struct InducedStop<S> {
    pub from: AtomId,
    /// `(last atom on the path, probability given `from`, outcome)`.
    pub paths: Vec<(AtomId, S, StopOutcome)>,
}

impl<S: Scalar> InducedStop<S> {
    /// Probability of stopping strictly before exit.
    pub fn stop_mass(&self) -> S {
        self.paths.iter().fold(S::zero(), |acc, (_, p, o)| match o {
            StopOutcome::Stop { .. } => acc + p.clone(),
            _ => acc,
        })
    }

    pub fn exit_mass(&self) -> S {
        self.paths.iter().fold(S::zero(), |acc, (_, p, o)| match o {
            StopOutcome::Exit { .. } => acc + p.clone(),
            _ => acc,
        })
    }

    pub fn never_mass(&self) -> S {
        self.paths.iter().fold(S::zero(), |acc, (_, p, o)| match o {
            StopOutcome::Never => acc + p.clone(),
            _ => acc,
        })
    }

    /// `E[G at the stop; stop before exit]`, conditional on `from`.
    pub fn payoff_mass(&self, tree: &AtomTree<S>) -> S {
        self.paths.iter().fold(S::zero(), |acc, (_, p, o)| match o {
            StopOutcome::Stop { atom, .. } => {
                acc + p.clone()
                    * tree
                        .atom(*atom)
                        .payoff
                        .clone()
                        .expect("stops are in the domain")
            }
            _ => acc,
        })
    }
}

/// Follows every path below `from` until the policy stops, the path exits,
/// or the tree ends.
pub fn induced_stop<S: Scalar>(
    tree: &AtomTree<S>,
    policy: &StoppingPolicy,
    from: AtomId,
) -> InducedStop<S> {
    let mut paths = Vec::new();
    if tree.atom(from).children.is_empty() {
        paths.push((from, S::one(), StopOutcome::Never));
    }
    let mut stack: Vec<(AtomId, S)> = tree
        .branches(from)
        .rev()
        .map(|(c, p)| (c, p.clone()))
        .collect();
    while let Some((id, prob)) = stack.pop() {
        let atom = tree.atom(id);
        if !atom.in_domain {
            paths.push((id, prob, StopOutcome::Exit { level: atom.level }));
        } else if policy.stops(id) {
            paths.push((
                id,
                prob,
                StopOutcome::Stop {
                    atom: id,
                    level: atom.level,
                },
            ));
        } else if atom.children.is_empty() {
            paths.push((id, prob, StopOutcome::Never));
        } else {
            for (c, p) in tree.branches(id).collect::<Vec<_>>().into_iter().rev() {
                stack.push((c, prob.clone() * p.clone()));
            }
        }
    }
    InducedStop { from, paths }
}

/// Conditional quantities of the continuation stopping time at one atom.
#[derive(Clone, Debug, PartialEq)]
pub struct Continuation<S> {
    /// `E[G_L 1{L ⊲ σ} | A]`.
    pub payoff_mass: S,
    /// `P(L ⊲ σ | A)`.
    pub survival: S,
    /// Probability that the tree ends before the policy stops or exits.
    pub never: S,
}

impl<S: Scalar> Continuation<S> {
    fn zero() -> Self {
        Continuation {
            payoff_mass: S::zero(),
            survival: S::zero(),
            never: S::zero(),
        }
    }

    /// Continuation value, when the survival probability is positive.
    pub fn value(&self) -> Option<S> {
        if self.survival.is_positive() {
            Some(self.payoff_mass.clone() / self.survival.clone())
        } else {
            None
        }
    }
}

/// What a parent atom receives from `child` when its agent continues.
pub(crate) fn contribution<S: Scalar>(
    tree: &AtomTree<S>,
    policy: &StoppingPolicy,
    table: &[Continuation<S>],
    child: AtomId,
) -> Continuation<S> {
    let atom = tree.atom(child);
    if !atom.in_domain {
        Continuation::zero()
    } else if policy.stops(child) {
        Continuation {
            payoff_mass: atom.payoff.clone().expect("in-domain atoms have payoffs"),
            survival: S::one(),
            never: S::zero(),
        }
    } else {
        table[child].clone()
    }
}

/// Aggregates one atom's continuation from its children's contributions.
pub(crate) fn aggregate<S: Scalar>(
    tree: &AtomTree<S>,
    policy: &StoppingPolicy,
    table: &[Continuation<S>],
    id: AtomId,
) -> Continuation<S> {
    if tree.atom(id).children.is_empty() {
        return Continuation {
            payoff_mass: S::zero(),
            survival: S::zero(),
            never: S::one(),
        };
    }
    tree.branches(id).fold(Continuation::zero(), |acc, (c, p)| {
        let k = contribution(tree, policy, table, c);
        Continuation {
            payoff_mass: acc.payoff_mass + p.clone() * k.payoff_mass,
            survival: acc.survival + p.clone() * k.survival,
            never: acc.never + p.clone() * k.never,
        }
    })
}

/// Continuation quantities for every atom, computed bottom-up in one pass.
pub fn continuation_table<S: Scalar>(
    tree: &AtomTree<S>,
    policy: &StoppingPolicy,
) -> Vec<Continuation<S>> {
    let mut table: Vec<Continuation<S>> = vec![Continuation::zero(); tree.len()];
    for id in (0..tree.len()).rev() {
        table[id] = aggregate(tree, policy, &table, id);
    }
    table
}

/// Why a policy is not admissible at an atom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    /// The atom is at or past the effective horizon but the policy continues.
    ContinuesPastHorizon,
    /// A continuing agent would condition on a null event.
    NoSurvival,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub atom: AtomId,
    pub kind: ViolationKind,
}

/// Lists every admissibility violation; an empty list means admissible.
pub fn admissibility_violations<S: Scalar>(
    tree: &AtomTree<S>,
    policy: &StoppingPolicy,
) -> Result<Vec<Violation>, SolveError> {
    policy.check_shape(tree)?;
    let flags = tree.effective_horizon();
    let table = continuation_table(tree, policy);
    let mut out = Vec::new();
    for atom in tree.atoms() {
        if flags[atom.id] {
            if !policy.stops(atom.id) {
                out.push(Violation {
                    atom: atom.id,
                    kind: ViolationKind::ContinuesPastHorizon,
                });
            }
        } else if !table[atom.id].survival.is_positive() {
            out.push(Violation {
                atom: atom.id,
                kind: ViolationKind::NoSurvival,
            });
        }
    }
    Ok(out)
}

/// Admissibility check returning the first violation on failure.
pub fn admissible<S: Scalar>(
    tree: &AtomTree<S>,
    policy: &StoppingPolicy,
) -> Result<(), SolveError> {
    match admissibility_violations(tree, policy)?.first() {
        None => Ok(()),
        Some(v) => Err(SolveError::Inadmissible {
            atom: tree.name(v.atom).to_string(),
            reason: match v.kind {
                ViolationKind::ContinuesPastHorizon => {
                    "continues at or past the effective horizon".into()
                }
                ViolationKind::NoSurvival => "continuation exits with probability one".into(),
            },
        }),
    }
}

/// `J_t(θ)` at `atom`: expected payoff at the continuation stopping time,
/// conditional on stopping before exit.
pub fn continuation_value<S: Scalar>(
    tree: &AtomTree<S>,
    policy: &StoppingPolicy,
    atom: AtomId,
) -> Result<S, SolveError> {
    policy.check_shape(tree)?;
    if tree.effective_horizon()[atom] {
        return Err(SolveError::PastEffectiveHorizon(
            tree.name(atom).to_string(),
        ));
    }
    let mut table = vec![Continuation::zero(); tree.len()];
    for id in tree.subtree(atom).into_iter().rev() {
        table[id] = aggregate(tree, policy, &table, id);
    }
    table[atom].value().ok_or_else(|| SolveError::Inadmissible {
        atom: tree.name(atom).to_string(),
        reason: "continuation exits with probability one".into(),
    })
}

/// Best-response update given continuation values; keeps the old bit on ties.
pub(crate) fn best_response<S: Scalar>(payoff: &S, continuation: &S, current: bool) -> bool {
    match payoff.compare(continuation) {
        Ordering::Greater => true,
        Ordering::Equal => current,
        Ordering::Less => false,
    }
}

/// The strategic-reasoning map: every agent before the effective horizon
/// best-responds to the others; agents at or past it stop.
pub fn phi<S: Scalar>(
    tree: &AtomTree<S>,
    policy: &StoppingPolicy,
) -> Result<StoppingPolicy, SolveError> {
    admissible(tree, policy)?;
    let flags = tree.effective_horizon();
    let table = continuation_table(tree, policy);
    let decisions = tree
        .atoms()
        .iter()
        .map(|atom| {
            if flags[atom.id] {
                return true;
            }
            let g = atom
                .payoff
                .as_ref()
                .expect("atoms before the effective horizon are in the domain");
            let j = table[atom.id].value().expect("admissible");
            best_response(g, &j, policy.stops(atom.id))
        })
        .collect();
    Ok(StoppingPolicy::new(decisions))
}

/// Outcome of [`is_equilibrium`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquilibriumCheck {
    pub violations: Vec<Violation>,
    /// Atoms whose agent would change their decision.
    pub deviating: Vec<AtomId>,
}

impl EquilibriumCheck {
    pub fn holds(&self) -> bool {
        self.violations.is_empty() && self.deviating.is_empty()
    }
}

/// Checks admissibility and `Φ(θ) = θ` atom by atom.
///
/// Decisions strictly past the effective horizon are normalized to stop first.
pub fn is_equilibrium<S: Scalar>(
    tree: &AtomTree<S>,
    policy: &StoppingPolicy,
) -> Result<EquilibriumCheck, SolveError> {
    policy.check_shape(tree)?;
    let policy = policy.normalized(tree);
    let violations = admissibility_violations(tree, &policy)?;
    if !violations.is_empty() {
        return Ok(EquilibriumCheck {
            violations,
            deviating: Vec::new(),
        });
    }
    let updated = phi(tree, &policy)?;
    let deviating = (0..tree.len())
        .filter(|&id| updated.stops(id) != policy.stops(id))
        .collect();
    Ok(EquilibriumCheck {
        violations,
        deviating,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::binomial_tree;
    use crate::model::{unroll, AtomTree};
    use crate::scalar::Exact;

    fn q(n: i64, d: i64) -> Exact {
        Exact::new(n.into(), d.into())
    }

    fn equilibrium_of_binomial(tree: &AtomTree<Exact>) -> StoppingPolicy {
        StoppingPolicy::from_fn(tree, |a| a.level > 0)
    }

    #[test]
    fn binomial_equilibrium_is_admissible() {
        let tree = binomial_tree();
        assert!(admissible(&tree, &equilibrium_of_binomial(&tree)).is_ok());
    }

    #[test]
    fn down_node_prefers_to_stop() {
        let tree = binomial_tree();
        let stop_at_two = StoppingPolicy::from_fn(&tree, |a| a.level == 2);
        let d = tree.find("d").unwrap();
        assert_eq!(continuation_value(&tree, &stop_at_two, d).unwrap(), q(2, 1));
        let root_value = continuation_value(&tree, &equilibrium_of_binomial(&tree), 0).unwrap();
        assert_eq!(root_value, q(13, 2));
    }

    #[test]
    fn phi_of_stop_everywhere() {
        let tree = binomial_tree();
        let updated = phi(&tree, &StoppingPolicy::stop_everywhere(&tree)).unwrap();
        assert_eq!(updated, equilibrium_of_binomial(&tree));
    }

    #[test]
    fn equilibrium_checks_on_binomial() {
        let tree = binomial_tree();
        assert!(is_equilibrium(&tree, &equilibrium_of_binomial(&tree))
            .unwrap()
            .holds());

        // The precommitted plan continues at the down node.
        let d = tree.find("d").unwrap();
        let plan = StoppingPolicy::from_fn(&tree, |a| a.name != "0" && a.name != "d");
        let check = is_equilibrium(&tree, &plan).unwrap();
        assert!(check.violations.is_empty());
        assert!(check.deviating.contains(&d));
    }

    #[test]
    fn constant_payoff_every_agent_is_indifferent() {
        let tree = AtomTree::builder(2)
            .root("r", q(5, 1))
            .node("a", "r", q(1, 2), Some(q(5, 1)))
            .node("b", "r", q(1, 2), Some(q(5, 1)))
            .node("aa", "a", q(1, 1), Some(q(5, 1)))
            .node("bb", "b", q(1, 1), Some(q(5, 1)))
            .build()
            .unwrap();
        let theta = StoppingPolicy::from_fn(&tree, |a| a.name != "r" && a.name != "a");
        assert_eq!(continuation_value(&tree, &theta, 0).unwrap(), q(5, 1));
        assert_eq!(phi(&tree, &theta).unwrap(), theta);
    }

    #[test]
    fn increasing_payoff_breaks_stop_everywhere() {
        let tree = AtomTree::builder(2)
            .root("r", q(0, 1))
            .node("a", "r", q(1, 1), Some(q(1, 1)))
            .node("aa", "a", q(1, 1), Some(q(2, 1)))
            .build()
            .unwrap();
        let check = is_equilibrium(&tree, &StoppingPolicy::stop_everywhere(&tree)).unwrap();
        assert!(!check.holds());
        assert_eq!(check.deviating, vec![0, 1]);
    }

    #[test]
    fn full_domain_stop_at_horizon_is_admissible() {
        let tree = AtomTree::builder(2)
            .root("r", q(1, 1))
            .node("a", "r", q(1, 3), Some(q(2, 1)))
            .node("b", "r", q(2, 3), Some(q(3, 1)))
            .node("aa", "a", q(1, 1), Some(q(4, 1)))
            .node("bb", "b", q(1, 1), Some(q(1, 1)))
            .build()
            .unwrap();
        let theta = StoppingPolicy::from_fn(&tree, |a| a.level == 2);
        assert!(admissible(&tree, &theta).is_ok());
    }

    #[test]
    fn exiting_continuation_is_inadmissible() {
        // Chain 1 -> {2: 1/2, exit: 1/2}, 2 -> exit surely; continuing
        // everywhere before the horizon leaves the root without survival.
        let model =
            crate::examples::two_state_with_row(q(9, 10), q(6, 5), [q(1, 1), q(0, 1), q(0, 1)]);
        let tree = unroll(&model, 3).unwrap();
        let theta = StoppingPolicy::from_fn(&tree, |a| a.level == 3 || !a.in_domain);
        let violations = admissibility_violations(&tree, &theta).unwrap();
        let state2 = tree.find("1.2").unwrap();
        assert!(violations.contains(&Violation {
            atom: state2,
            kind: ViolationKind::ContinuesPastHorizon
        }));
        assert!(admissible(&tree, &theta).is_err());

        // Path-by-path: nothing below a state-2 atom ever stops in the domain.
        let induced = induced_stop(&tree, &theta, state2);
        assert_eq!(induced.stop_mass(), q(0, 1));
        assert_eq!(induced.exit_mass(), q(1, 1));
    }

    #[test]
    fn induced_stop_matches_table() {
        let tree = binomial_tree();
        let theta = StoppingPolicy::from_fn(&tree, |a| a.name == "u" || a.level == 2);
        let table = continuation_table(&tree, &theta);
        for id in 0..tree.len() {
            let induced = induced_stop(&tree, &theta, id);
            assert_eq!(induced.stop_mass(), table[id].survival);
            assert_eq!(induced.payoff_mass(&tree), table[id].payoff_mass);
            assert_eq!(induced.never_mass(), table[id].never);
        }
    }

    #[test]
    fn continuation_value_errors() {
        let tree = binomial_tree();
        let theta = StoppingPolicy::stop_everywhere(&tree);
        let uu = tree.find("uu").unwrap();
        assert!(matches!(
            continuation_value(&tree, &theta, uu),
            Err(SolveError::PastEffectiveHorizon(_))
        ));
        assert!(matches!(
            continuation_value(&tree, &StoppingPolicy::new(vec![true]), 0),
            Err(SolveError::PolicyShape { .. })
        ));
    }
}
