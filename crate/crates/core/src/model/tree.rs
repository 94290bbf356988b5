use std::collections::HashMap;

use crate::error::ModelError;
use crate::scalar::Scalar;

/// Index of an atom inside its [`AtomTree`]. Atoms are stored level by level.
pub type AtomId = usize;

/// One cell of the level-`t` partition of the filtration.
#[derive(Clone, Debug)]
pub struct Atom<S> {
    pub id: AtomId,
    /// Opaque identifier used in files and reports.
    pub name: String,
    pub level: usize,
    pub parent: Option<AtomId>,
    pub children: Vec<AtomId>,
    /// Conditional probability given the parent atom.
    pub branch_prob: S,
    /// Whether the atom lies in the domain of relevance at its level.
    pub in_domain: bool,
    /// Stopping payoff; absent exactly when the atom is out of the domain.
    pub payoff: Option<S>,
    /// Markov state of the atom when the tree was unrolled from a chain.
    pub state: Option<usize>,
}

/// Description of one node, as read from a file or assembled by hand.
#[derive(Clone, Debug)]
pub struct NodeSpec<S> {
    pub name: String,
    pub parent: Option<String>,
    pub prob: S,
    pub in_domain: bool,
    pub payoff: Option<S>,
}

/// A finite filtration on `{0, ..., T}` represented by its atoms.
#[derive(Clone, Debug)]
pub struct AtomTree<S> {
    horizon: usize,
    atoms: Vec<Atom<S>>,
    levels: Vec<Vec<AtomId>>,
    by_name: HashMap<String, AtomId>,
}

impl<S: Scalar> AtomTree<S> {
    pub fn builder(horizon: usize) -> TreeBuilder<S> {
        TreeBuilder {
            horizon,
            nodes: Vec::new(),
        }
    }

    /// Builds and validates a tree from node descriptions.
    ///
    /// Children keep the order in which they appear in `nodes`.
    pub fn from_nodes(horizon: usize, nodes: Vec<NodeSpec<S>>) -> Result<Self, ModelError> {
        if horizon == 0 {
            return Err(ModelError::NonPositiveHorizon);
        }
        let mut index: HashMap<String, usize> = HashMap::new();
        for (i, node) in nodes.iter().enumerate() {
            if index.insert(node.name.clone(), i).is_some() {
                return Err(ModelError::Duplicate(node.name.clone()));
            }
        }
        let roots: Vec<usize> = (0..nodes.len())
            .filter(|&i| nodes[i].parent.is_none())
            .collect();
        if roots.len() != 1 {
            return Err(ModelError::RootCount(roots.len()));
        }
        let mut kids: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
        for (i, node) in nodes.iter().enumerate() {
            if let Some(parent) = &node.parent {
                let p = *index
                    .get(parent)
                    .ok_or_else(|| ModelError::UnknownParent(node.name.clone()))?;
                kids[p].push(i);
            }
        }

        // Breadth-first relabelling; nodes not reached hang off a cycle.
        let mut order = vec![roots[0]];
        let mut level_of = vec![usize::MAX; nodes.len()];
        level_of[roots[0]] = 0;
        let mut head = 0;
        while head < order.len() {
            let i = order[head];
            head += 1;
            for &c in &kids[i] {
                level_of[c] = level_of[i] + 1;
                if level_of[c] > horizon {
                    return Err(ModelError::TooDeep(nodes[c].name.clone()));
                }
                order.push(c);
            }
        }
        if order.len() != nodes.len() {
            let stray = (0..nodes.len())
                .find(|&i| level_of[i] == usize::MAX)
                .unwrap_or(0);
            return Err(ModelError::UnknownParent(nodes[stray].name.clone()));
        }
        order.sort_by_key(|&i| level_of[i]);
        let mut new_id = vec![0; nodes.len()];
        for (id, &i) in order.iter().enumerate() {
            new_id[i] = id;
        }
        let atoms = order
            .iter()
            .map(|&i| {
                let node = &nodes[i];
                Atom {
                    id: new_id[i],
                    name: node.name.clone(),
                    level: level_of[i],
                    parent: node.parent.as_ref().map(|p| new_id[index[p]]),
                    children: kids[i].iter().map(|&c| new_id[c]).collect(),
                    branch_prob: if node.parent.is_none() {
                        S::one()
                    } else {
                        node.prob.clone()
                    },
                    in_domain: node.in_domain,
                    payoff: node.payoff.clone(),
                    state: None,
                }
            })
            .collect();
        Self::from_atoms(horizon, atoms)
    }

    /// Assembles a tree from atoms already in level order with consistent links.
    pub(crate) fn from_atoms(horizon: usize, atoms: Vec<Atom<S>>) -> Result<Self, ModelError> {
        let mut levels = vec![Vec::new(); horizon + 1];
        let mut by_name = HashMap::with_capacity(atoms.len());
        for atom in &atoms {
            if atom.level > horizon {
                return Err(ModelError::TooDeep(atom.name.clone()));
            }
            levels[atom.level].push(atom.id);
            if by_name.insert(atom.name.clone(), atom.id).is_some() {
                return Err(ModelError::Duplicate(atom.name.clone()));
            }
        }
        let tree = AtomTree {
            horizon,
            atoms,
            levels,
            by_name,
        };
        tree.validate()?;
        Ok(tree)
    }

    fn validate(&self) -> Result<(), ModelError> {
        let root = &self.atoms[0];
        if !root.in_domain {
            return Err(ModelError::RootOutsideDomain);
        }
        for atom in &self.atoms {
            if atom.in_domain != atom.payoff.is_some() {
                return Err(ModelError::PayoffPresence(atom.name.clone()));
            }
            if atom.parent.is_some() && !atom.branch_prob.is_positive() {
                return Err(ModelError::NonPositiveBranch(atom.name.clone()));
            }
            if let Some(p) = atom.parent {
                if atom.in_domain && !self.atoms[p].in_domain {
                    return Err(ModelError::DomainNotMonotone(atom.name.clone()));
                }
            }
            if atom.level < self.horizon {
                if atom.children.is_empty() {
                    return Err(ModelError::MissingChildren(atom.name.clone()));
                }
                let sum = atom
                    .children
                    .iter()
                    .fold(S::zero(), |acc, &c| acc + self.atoms[c].branch_prob.clone());
                if !sum.same(&S::one()) {
                    return Err(ModelError::ChildSum {
                        atom: atom.name.clone(),
                        sum: sum.to_canonical_string(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn root(&self) -> &Atom<S> {
        &self.atoms[0]
    }

    pub fn atom(&self, id: AtomId) -> &Atom<S> {
        &self.atoms[id]
    }

    pub fn atoms(&self) -> &[Atom<S>] {
        &self.atoms
    }

    pub fn level(&self, t: usize) -> &[AtomId] {
        &self.levels[t]
    }

    pub fn find(&self, name: &str) -> Option<AtomId> {
        self.by_name.get(name).copied()
    }

    pub fn name(&self, id: AtomId) -> &str {
        &self.atoms[id].name
    }

    /// Children of `id` together with their conditional probabilities.
    pub fn branches(&self, id: AtomId) -> impl DoubleEndedIterator<Item = (AtomId, &S)> + '_ {
        self.atoms[id]
            .children
            .iter()
            .map(move |&c| (c, &self.atoms[c].branch_prob))
    }

    /// `E[values at level t+1 | atom]`.
    pub fn conditional_expectation(&self, id: AtomId, values: &[S]) -> S {
        self.branches(id)
            .fold(S::zero(), |acc, (c, p)| acc + p.clone() * values[c].clone())
    }

    /// Unconditional probability of every atom.
    pub fn unconditional_probs(&self) -> Vec<S> {
        let mut probs: Vec<S> = Vec::with_capacity(self.atoms.len());
        for atom in &self.atoms {
            let p = match atom.parent {
                Some(parent) => probs[parent].clone() * atom.branch_prob.clone(),
                None => S::one(),
            };
            probs.push(p);
        }
        probs
    }

    /// For each atom, whether it lies at or past the effective horizon `T_e`.
    ///
    /// An atom is flagged when it sits at level `T`, lies outside the domain,
    /// has no in-domain child, or has a flagged ancestor. Flags are monotone
    /// along paths.
    pub fn effective_horizon(&self) -> Vec<bool> {
        let mut flags = vec![false; self.atoms.len()];
        for atom in &self.atoms {
            let inherited = atom.parent.is_some_and(|p| flags[p]);
            flags[atom.id] = inherited
                || atom.level == self.horizon
                || !atom.in_domain
                || !atom.children.iter().any(|&c| self.atoms[c].in_domain);
        }
        flags
    }

    /// Payoffs as a dense vector; out-of-domain atoms carry `None`.
    pub fn payoffs(&self) -> Vec<Option<S>> {
        self.atoms.iter().map(|a| a.payoff.clone()).collect()
    }

    /// Ids of all atoms in the subtree rooted at `id`, the root first.
    pub fn subtree(&self, id: AtomId) -> Vec<AtomId> {
        let mut out = vec![id];
        let mut head = 0;
        while head < out.len() {
            let a = out[head];
            head += 1;
            out.extend(self.atoms[a].children.iter().copied());
        }
        out
    }

    /// Converts every number in the tree to another scalar type.
    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(&S) -> T) -> AtomTree<T> {
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                id: a.id,
                name: a.name.clone(),
                level: a.level,
                parent: a.parent,
                children: a.children.clone(),
                branch_prob: f(&a.branch_prob),
                in_domain: a.in_domain,
                payoff: a.payoff.as_ref().map(&f),
                state: a.state,
            })
            .collect();
        AtomTree {
            horizon: self.horizon,
            atoms,
            levels: self.levels.clone(),
            by_name: self.by_name.clone(),
        }
    }
}

/// Incremental construction of an [`AtomTree`].
#[derive(Clone, Debug)]
pub struct TreeBuilder<S> {
    horizon: usize,
    nodes: Vec<NodeSpec<S>>,
}

impl<S: Scalar> TreeBuilder<S> {
    pub fn root(mut self, name: &str, payoff: S) -> Self {
        self.nodes.push(NodeSpec {
            name: name.to_string(),
            parent: None,
            prob: S::one(),
            in_domain: true,
            payoff: Some(payoff),
        });
        self
    }

    /// Adds a child; `payoff = None` marks it as outside the domain.
    pub fn node(mut self, name: &str, parent: &str, prob: S, payoff: Option<S>) -> Self {
        self.nodes.push(NodeSpec {
            name: name.to_string(),
            parent: Some(parent.to_string()),
            prob,
            in_domain: payoff.is_some(),
            payoff,
        });
        self
    }

    pub fn build(self) -> Result<AtomTree<S>, ModelError> {
        AtomTree::from_nodes(self.horizon, self.nodes)
    }
}
