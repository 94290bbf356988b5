use std::cmp::Ordering;

use super::{classical_snell, one_step, stopped_at_effective_horizon, SnellPair};
use crate::error::SolveError;
use crate::model::{AtomId, AtomTree};
use crate::policy::{continuation_table, StoppingPolicy};
use crate::scalar::Scalar;

/// Result of one named condition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: &'static str,
    pub holds: bool,
    /// Atoms where the condition fails.
    pub atoms: Vec<AtomId>,
}

impl Check {
    fn new(name: &'static str, atoms: Vec<AtomId>) -> Self {
        Check {
            name,
            holds: atoms.is_empty(),
            atoms,
        }
    }
}

/// A list of named checks; passes when all of them do.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn holds(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn mismatches<S: Scalar>(a: &[S], b: &[S]) -> Vec<AtomId> {
    (0..a.len()).filter(|&i| !a[i].same(&b[i])).collect()
}

fn check_shape<S: Scalar>(tree: &AtomTree<S>, pair: &SnellPair<S>) -> Result<(), SolveError> {
    for got in [pair.v.len(), pair.s.len()] {
        if got != tree.len() {
            return Err(SolveError::PolicyShape {
                expected: tree.len(),
                got,
            });
        }
    }
    Ok(())
}

/// Checks every defining property of a Snell pair on a finite tree.
///
/// * `bounds`: `0 < S ≤ 1` on the domain, `S = 0` off it, `V = G` at and past
///   the effective horizon.
/// * `dominates`: `V ≥ G` on the domain.
/// * `value_envelope`: `(SV)` stopped at `T_e` is the Snell envelope of `(SG)`
///   stopped at `T_e`.
/// * `survival_envelope`: `S` is the Snell envelope of `1{V = G} 1_D`.
/// * `shifted_supermartingale`: for every `t0 < T`, `(S^{t0} V)` stopped at
///   `T_e` is a supermartingale.
/// * `off_obstacle_martingale`: before `T_e` on `{V > G}`, `S = E[S']` and
///   `SV = E[S'V']`.
pub fn verify_snell_pair<S: Scalar>(
    tree: &AtomTree<S>,
    pair: &SnellPair<S>,
) -> Result<Report, SolveError> {
    check_shape(tree, pair)?;
    let flags = tree.effective_horizon();
    let n = tree.len();

    let mut bounds = Vec::new();
    let mut dominates = Vec::new();
    for atom in tree.atoms() {
        let id = atom.id;
        let s = &pair.s[id];
        let ok = if atom.in_domain {
            s.is_positive() && s.compare(&S::one()) != Ordering::Greater && pair.v[id].is_some()
        } else {
            s.is_zero() && pair.v[id].is_none()
        };
        let boundary = !flags[id]
            || match (&atom.payoff, &pair.v[id]) {
                (Some(g), Some(v)) => g.same(v),
                (None, None) => true,
                _ => false,
            };
        if !ok || !boundary {
            bounds.push(id);
        }
        if let (Some(g), Some(v)) = (&atom.payoff, &pair.v[id]) {
            if v.compare(g) == Ordering::Less {
                dominates.push(id);
            }
        }
    }

    let sv: Vec<S> = (0..n).map(|id| pair.product(id)).collect();
    let sg: Vec<S> = tree
        .atoms()
        .iter()
        .map(|a| match &a.payoff {
            Some(g) if !pair.s[a.id].is_zero() => pair.s[a.id].clone() * g.clone(),
            _ => S::zero(),
        })
        .collect();
    let envelope = classical_snell(tree, &stopped_at_effective_horizon(tree, &sg));
    let value_envelope = mismatches(&stopped_at_effective_horizon(tree, &sv), &envelope);

    let indicator: Vec<S> = tree
        .atoms()
        .iter()
        .map(|a| match (&a.payoff, &pair.v[a.id]) {
            (Some(g), Some(v)) if a.in_domain && g.same(v) => S::one(),
            _ => S::zero(),
        })
        .collect();
    let survival_envelope = mismatches(&pair.s, &classical_snell(tree, &indicator));

    // Only atoms before T_e move the stopped process; at level t0 the
    // survival factor is replaced by E[S_{t0+1} | F_{t0}].
    let mut shifted = Vec::new();
    for atom in tree.atoms() {
        let id = atom.id;
        if flags[id] {
            continue;
        }
        let v = pair.v[id].clone().unwrap_or_else(S::zero);
        let (num, den) = one_step(tree, pair, id);
        // t0 at this atom's level: E[S'V'] ≤ E[S'] V.
        let at_level = num.compare(&(den * v)) != Ordering::Greater;
        // t0 one level below: E[E[S''|c] V_c] ≤ S V.
        let below = tree.branches(id).fold(S::zero(), |acc, (c, p)| {
            let term = match &pair.v[c] {
                Some(vc) if !tree.atom(c).children.is_empty() => {
                    one_step(tree, pair, c).1 * vc.clone()
                }
                _ => pair.product(c),
            };
            acc + p.clone() * term
        });
        let one_below = below.compare(&sv[id]) != Ordering::Greater;
        // Any other t0: E[S'V'] ≤ SV.
        let plain = num.compare(&sv[id]) != Ordering::Greater;
        if !at_level || !one_below || !plain {
            shifted.push(id);
        }
    }

    let mut off_obstacle = Vec::new();
    for atom in tree.atoms() {
        let id = atom.id;
        if flags[id] {
            continue;
        }
        if let (Some(g), Some(v)) = (&atom.payoff, &pair.v[id]) {
            if v.compare(g) == Ordering::Greater {
                let (num, den) = one_step(tree, pair, id);
                if !pair.s[id].same(&den) || !sv[id].same(&num) {
                    off_obstacle.push(id);
                }
            }
        }
    }

    Ok(Report {
        checks: vec![
            Check::new("bounds", bounds),
            Check::new("dominates", dominates),
            Check::new("value_envelope", value_envelope),
            Check::new("survival_envelope", survival_envelope),
            Check::new("shifted_supermartingale", shifted),
            Check::new("off_obstacle_martingale", off_obstacle),
        ],
    })
}

/// Checks, at every atom, that the pair reproduces the policy's continuation
/// values and survival probabilities.
///
/// * `continuation`: `E[S'V'] / E[S'] = J_t(θ)` before `T_e`.
/// * `survival`: `E[S'] = P(L_tθ ⊲ σ | F_t)` before `T_e`.
/// * `survival_cases`: `S = E[S']` where `θ` continues, `S = 1` where it stops
///   before `T_e`, and `S = 1_D` from `T_e` on.
pub fn survival_identities<S: Scalar>(
    tree: &AtomTree<S>,
    policy: &StoppingPolicy,
    pair: &SnellPair<S>,
) -> Result<Report, SolveError> {
    check_shape(tree, pair)?;
    policy.check_shape(tree)?;
    let policy = policy.normalized(tree);
    let flags = tree.effective_horizon();
    let table = continuation_table(tree, &policy);
    let mut continuation = Vec::new();
    let mut survival = Vec::new();
    let mut cases = Vec::new();
    for atom in tree.atoms() {
        let id = atom.id;
        if flags[id] {
            let expected = if atom.in_domain { S::one() } else { S::zero() };
            if !pair.s[id].same(&expected) {
                cases.push(id);
            }
            continue;
        }
        let (num, den) = one_step(tree, pair, id);
        if !den.same(&table[id].survival) {
            survival.push(id);
        }
        let j_pair = if den.is_positive() {
            Some(num / den.clone())
        } else {
            None
        };
        match (j_pair, table[id].value()) {
            (Some(a), Some(b)) if a.same(&b) => {}
            _ => continuation.push(id),
        }
        let expected = if policy.stops(id) { S::one() } else { den };
        if !pair.s[id].same(&expected) {
            cases.push(id);
        }
    }
    Ok(Report {
        checks: vec![
            Check::new("continuation", continuation),
            Check::new("survival", survival),
            Check::new("survival_cases", cases),
        ],
    })
}
