use std::collections::BTreeMap;

use crate::error::ModelError;
use crate::model::tree::{Atom, AtomTree};
use crate::scalar::Scalar;

/// Length of the time axis of a model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Horizon {
    Finite(usize),
    Infinite,
}

/// A finite Markov chain started at a fixed state, with domain set `B`,
/// payoff `G_t = discount^t * g(t, X_t)` on `B` and exit at the first time the
/// chain leaves `B`.
#[derive(Clone, Debug)]
pub struct MarkovModel<S> {
    states: Vec<String>,
    initial: usize,
    transition: Vec<Vec<S>>,
    domain: Vec<bool>,
    payoff: Vec<Option<S>>,
    payoff_by_time: BTreeMap<(usize, usize), S>,
    discount: S,
    horizon: Horizon,
    forced_stop: Vec<bool>,
}

impl<S: Scalar> MarkovModel<S> {
    /// Validates and builds a model.
    ///
    /// `payoff[x]` must be `Some` exactly for states in the domain.
    pub fn new(
        states: Vec<String>,
        initial: usize,
        transition: Vec<Vec<S>>,
        domain: Vec<bool>,
        payoff: Vec<Option<S>>,
        discount: S,
        horizon: Horizon,
    ) -> Result<Self, ModelError> {
        let n = states.len();
        if n == 0 {
            return Err(ModelError::NoStates);
        }
        for (i, s) in states.iter().enumerate() {
            if states[..i].contains(s) {
                return Err(ModelError::Duplicate(s.clone()));
            }
        }
        if initial >= n {
            return Err(ModelError::UnknownState(initial.to_string()));
        }
        if transition.len() != n || domain.len() != n || payoff.len() != n {
            return Err(ModelError::NoStates);
        }
        for (x, row) in transition.iter().enumerate() {
            if row.len() != n {
                return Err(ModelError::RowSum {
                    state: states[x].clone(),
                    sum: "?".into(),
                });
            }
            for (y, p) in row.iter().enumerate() {
                if p.is_negative() {
                    return Err(ModelError::NegativeProbability {
                        from: states[x].clone(),
                        to: states[y].clone(),
                    });
                }
            }
            let sum = row.iter().fold(S::zero(), |acc, p| acc + p.clone());
            if !sum.same(&S::one()) {
                return Err(ModelError::RowSum {
                    state: states[x].clone(),
                    sum: sum.to_canonical_string(),
                });
            }
        }
        if !domain[initial] {
            return Err(ModelError::InitialOutsideDomain(states[initial].clone()));
        }
        for x in 0..n {
            if domain[x] != payoff[x].is_some() {
                return Err(ModelError::PayoffDomainMismatch(states[x].clone()));
            }
        }
        if !discount.is_positive() || discount.compare(&S::one()) == std::cmp::Ordering::Greater {
            return Err(ModelError::Discount(discount.to_canonical_string()));
        }
        if horizon == Horizon::Finite(0) {
            return Err(ModelError::NonPositiveHorizon);
        }
        Ok(MarkovModel {
            forced_stop: vec![false; n],
            states,
            initial,
            transition,
            domain,
            payoff,
            payoff_by_time: BTreeMap::new(),
            discount,
            horizon,
        })
    }

    /// Declares states at which every considered policy stops.
    pub fn with_forced_stop(mut self, states: &[usize]) -> Self {
        for &x in states {
            self.forced_stop[x] = true;
        }
        self
    }

    /// Overrides `g(t, x)` for a single time and domain state.
    pub fn with_time_payoff(
        mut self,
        t: usize,
        state: usize,
        value: S,
    ) -> Result<Self, ModelError> {
        if !self.domain[state] {
            return Err(ModelError::PayoffDomainMismatch(self.states[state].clone()));
        }
        self.payoff_by_time.insert((t, state), value);
        Ok(self)
    }

    pub fn with_horizon(mut self, horizon: Horizon) -> Result<Self, ModelError> {
        if horizon == Horizon::Finite(0) {
            return Err(ModelError::NonPositiveHorizon);
        }
        self.horizon = horizon;
        Ok(self)
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s == label)
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn transition(&self) -> &[Vec<S>] {
        &self.transition
    }

    pub fn prob(&self, from: usize, to: usize) -> &S {
        &self.transition[from][to]
    }

    pub fn in_domain(&self, state: usize) -> bool {
        self.domain[state]
    }

    pub fn domain(&self) -> &[bool] {
        &self.domain
    }

    pub fn discount(&self) -> &S {
        &self.discount
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }

    pub fn forced_stop(&self) -> &[bool] {
        &self.forced_stop
    }

    pub fn has_time_payoffs(&self) -> bool {
        !self.payoff_by_time.is_empty()
    }

    pub fn time_payoffs(&self) -> &BTreeMap<(usize, usize), S> {
        &self.payoff_by_time
    }

    /// Undiscounted payoff `g(x)`; `None` outside the domain.
    pub fn g(&self, state: usize) -> Option<&S> {
        self.payoff[state].as_ref()
    }

    /// `g(t, x)`, honouring time-dependent overrides.
    pub fn g_at(&self, t: usize, state: usize) -> Option<&S> {
        if !self.domain[state] {
            return None;
        }
        self.payoff_by_time
            .get(&(t, state))
            .or(self.payoff[state].as_ref())
    }

    /// `G_t = discount^t * g(t, x)` on the domain.
    pub fn gain(&self, t: usize, state: usize) -> Option<S> {
        self.g_at(t, state)
            .map(|g| self.discount.powi(t) * g.clone())
    }

    /// States in the domain whose every transition leaves the domain.
    pub fn dead_end(&self, state: usize) -> bool {
        self.domain[state]
            && (0..self.n_states()).all(|y| !self.domain[y] || self.transition[state][y].is_zero())
    }

    /// Converts every number in the model to another scalar type.
    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(&S) -> T) -> MarkovModel<T> {
        MarkovModel {
            states: self.states.clone(),
            initial: self.initial,
            transition: self
                .transition
                .iter()
                .map(|r| r.iter().map(&f).collect())
                .collect(),
            domain: self.domain.clone(),
            payoff: self.payoff.iter().map(|g| g.as_ref().map(&f)).collect(),
            payoff_by_time: self
                .payoff_by_time
                .iter()
                .map(|(k, v)| (*k, f(v)))
                .collect(),
            discount: f(&self.discount),
            horizon: self.horizon,
            forced_stop: self.forced_stop.clone(),
        }
    }
}

/// Label given to the collapsed post-exit atoms of an unrolled tree.
pub const EXIT_LABEL: &str = "exit";

/// Unrolls a chain into the tree of its positive-probability paths up to
/// level `horizon`.
///
/// All transitions leaving the domain are merged into one out-of-domain child,
/// followed by a deterministic chain of out-of-domain atoms down to the
/// horizon. Atom names are the dot-joined state labels of the path.
pub fn unroll<S: Scalar>(
    model: &MarkovModel<S>,
    horizon: usize,
) -> Result<AtomTree<S>, ModelError> {
    if horizon == 0 {
        return Err(ModelError::NonPositiveHorizon);
    }
    let n = model.n_states();
    let x0 = model.initial;
    let mut atoms: Vec<Atom<S>> = vec![Atom {
        id: 0,
        name: model.states[x0].clone(),
        level: 0,
        parent: None,
        children: Vec::new(),
        branch_prob: S::one(),
        in_domain: true,
        payoff: model.gain(0, x0),
        state: Some(x0),
    }];
    let mut frontier = vec![0usize];
    let mut discount_t = S::one();
    for t in 0..horizon {
        discount_t = discount_t * model.discount.clone();
        let mut next = Vec::new();
        for &id in &frontier {
            let mut push =
                |atoms: &mut Vec<Atom<S>>, name: String, prob: S, state: Option<usize>| {
                    let child = atoms.len();
                    let payoff =
                        state.map(|y| discount_t.clone() * model.g_at(t + 1, y).unwrap().clone());
                    atoms.push(Atom {
                        id: child,
                        name,
                        level: t + 1,
                        parent: Some(id),
                        children: Vec::new(),
                        branch_prob: prob,
                        in_domain: state.is_some(),
                        payoff,
                        state,
                    });
                    atoms[id].children.push(child);
                    next.push(child);
                };
            let parent_name = atoms[id].name.clone();
            match atoms[id].state {
                Some(x) if atoms[id].in_domain => {
                    let mut exit_mass = S::zero();
                    for y in 0..n {
                        let p = &model.transition[x][y];
                        if p.is_zero() {
                            continue;
                        }
                        if model.domain[y] {
                            push(
                                &mut atoms,
                                format!("{parent_name}.{}", model.states[y]),
                                p.clone(),
                                Some(y),
                            );
                        } else {
                            exit_mass = exit_mass + p.clone();
                        }
                    }
                    if exit_mass.is_positive() {
                        push(
                            &mut atoms,
                            format!("{parent_name}.{EXIT_LABEL}"),
                            exit_mass,
                            None,
                        );
                    }
                }
                _ => push(
                    &mut atoms,
                    format!("{parent_name}.{EXIT_LABEL}"),
                    S::one(),
                    None,
                ),
            }
        }
        frontier = next;
    }
    AtomTree::from_atoms(horizon, atoms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::{minnie_donald, two_state};
    use crate::scalar::Exact;

    fn q(n: i64, d: i64) -> Exact {
        Exact::new(n.into(), d.into())
    }

    #[test]
    fn two_state_one_step() {
        let model = two_state(q(9, 10), q(6, 5));
        let tree = unroll(&model, 1).unwrap();
        let root = tree.root();
        assert_eq!(root.children.len(), 3);
        let kids: Vec<_> = root.children.iter().map(|&c| tree.atom(c)).collect();
        assert_eq!(kids[0].state, Some(1));
        assert_eq!(kids[0].branch_prob, q(1, 3));
        assert_eq!(kids[0].payoff, Some(q(9, 10)));
        assert_eq!(kids[1].state, Some(2));
        assert_eq!(kids[1].payoff, Some(q(9, 10) * q(6, 5)));
        assert!(!kids[2].in_domain);
        assert_eq!(kids[2].branch_prob, q(1, 3));
        assert_eq!(kids[2].payoff, None);
    }

    #[test]
    fn minnie_donald_two_steps() {
        let model = minnie_donald(q(999, 1000), q(96, 100), q(4257, 1000), 1);
        let tree = unroll(&model, 2).unwrap();
        let level1: Vec<_> = tree.level(1).iter().map(|&c| tree.atom(c)).collect();
        let l1: Vec<_> = level1
            .iter()
            .map(|a| (a.name.as_str(), a.branch_prob.clone()))
            .collect();
        assert_eq!(l1, vec![("1.2", q(1, 2)), ("1.3", q(1, 2))]);
        let under = |name: &str| -> Vec<(String, Exact)> {
            let id = tree.find(name).unwrap();
            tree.atom(id)
                .children
                .iter()
                .map(|&c| (tree.name(c).to_string(), tree.atom(c).branch_prob.clone()))
                .collect()
        };
        assert_eq!(
            under("1.2"),
            vec![
                ("1.2.1".to_string(), q(1, 10)),
                ("1.2.3".to_string(), q(4, 10)),
                ("1.2.4".to_string(), q(4, 10)),
                ("1.2.exit".to_string(), q(1, 10)),
            ]
        );
        assert_eq!(under("1.3"), vec![("1.3.3".to_string(), q(1, 1))]);
    }

    #[test]
    fn full_domain_never_exits() {
        let model = MarkovModel::new(
            vec!["a".into(), "b".into()],
            0,
            vec![vec![q(1, 2), q(1, 2)], vec![q(1, 4), q(3, 4)]],
            vec![true, true],
            vec![Some(q(1, 1)), Some(q(2, 1))],
            q(1, 2),
            Horizon::Finite(2),
        )
        .unwrap();
        let tree = unroll(&model, 2).unwrap();
        assert!(tree.atoms().iter().all(|a| a.in_domain));
    }

    #[test]
    fn time_dependent_payoff_is_discounted() {
        let model = two_state(q(1, 2), q(3, 2))
            .with_time_payoff(1, 1, q(10, 1))
            .unwrap();
        let tree = unroll(&model, 1).unwrap();
        let id = tree.find("1.1").unwrap();
        assert_eq!(tree.atom(id).payoff, Some(q(5, 1)));
    }

    #[test]
    fn rejects_invalid_models() {
        let base = || {
            (
                vec!["a".to_string(), "b".to_string()],
                vec![vec![q(1, 2), q(1, 2)], vec![q(0, 1), q(1, 1)]],
            )
        };
        let (s, t) = base();
        let bad_row = MarkovModel::new(
            s,
            0,
            vec![t[0].clone(), vec![q(1, 2), q(1, 3)]],
            vec![true, false],
            vec![Some(q(1, 1)), None],
            q(1, 2),
            Horizon::Infinite,
        );
        assert!(matches!(bad_row, Err(ModelError::RowSum { .. })));
        let (s, t) = base();
        let outside = MarkovModel::new(
            s,
            1,
            t,
            vec![true, false],
            vec![Some(q(1, 1)), None],
            q(1, 2),
            Horizon::Infinite,
        );
        assert!(matches!(outside, Err(ModelError::InitialOutsideDomain(_))));
        let (s, t) = base();
        let payoff = MarkovModel::new(
            s,
            0,
            t,
            vec![true, false],
            vec![Some(q(1, 1)), Some(q(1, 1))],
            q(1, 2),
            Horizon::Infinite,
        );
        assert!(matches!(payoff, Err(ModelError::PayoffDomainMismatch(_))));
        let (s, t) = base();
        let disc = MarkovModel::new(
            s,
            0,
            t,
            vec![true, false],
            vec![Some(q(1, 1)), None],
            q(3, 2),
            Horizon::Infinite,
        );
        assert!(matches!(disc, Err(ModelError::Discount(_))));
        let model = two_state(q(1, 2), q(3, 2));
        assert!(matches!(
            unroll(&model, 0),
            Err(ModelError::NonPositiveHorizon)
        ));
    }
}
