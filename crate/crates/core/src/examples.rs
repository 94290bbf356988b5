//! Built-in models: the two-period binomial tree, the two-state chain and the
//! five-state chain without time-homogeneous equilibria.

use crate::error::ModelError;
use crate::model::{AtomTree, Horizon, MarkovModel};
use crate::scalar::{Exact, Scalar};

fn q(n: i64, d: i64) -> Exact {
    Exact::new(n.into(), d.into())
}

/// Two-period recombining binomial tree with exit at `dd`.
///
/// Payoffs: root 2, up 10, down 3, `uu` 4, `ud` = `du` 2. Every edge has
/// probability 1/2.
pub fn binomial_tree() -> AtomTree<Exact> {
    let half = q(1, 2);
    AtomTree::builder(2)
        .root("0", q(2, 1))
        .node("u", "0", half.clone(), Some(q(10, 1)))
        .node("d", "0", half.clone(), Some(q(3, 1)))
        .node("uu", "u", half.clone(), Some(q(4, 1)))
        .node("ud", "u", half.clone(), Some(q(2, 1)))
        .node("du", "d", half.clone(), Some(q(2, 1)))
        .node("dd", "d", half, None)
        .build()
        .expect("built-in tree is valid")
}

/// Chain on `{0, 1, 2}` started at 1, exiting at 0, with `g(1) = 1` and
/// `g(2) = a`. Row 1 is uniform; row 2 defaults to uniform as well.
pub fn two_state(discount: Exact, a: Exact) -> MarkovModel<Exact> {
    let third = q(1, 3);
    two_state_with_row(discount, a, [third.clone(), third.clone(), third])
}

/// [`two_state`] with an explicit transition row `(p20, p21, p22)`.
pub fn two_state_with_row(discount: Exact, a: Exact, row2: [Exact; 3]) -> MarkovModel<Exact> {
    try_two_state(discount, a, row2).expect("two-state parameters must give a valid chain")
}

/// Fallible form of [`two_state_with_row`].
pub fn try_two_state(
    discount: Exact,
    a: Exact,
    row2: [Exact; 3],
) -> Result<MarkovModel<Exact>, ModelError> {
    let third = q(1, 3);
    MarkovModel::new(
        vec!["0".into(), "1".into(), "2".into()],
        1,
        vec![
            vec![q(1, 1), q(0, 1), q(0, 1)],
            vec![third.clone(), third.clone(), third],
            row2.to_vec(),
        ],
        vec![false, true, true],
        vec![None, Some(q(1, 1)), Some(a)],
        discount,
        Horizon::Infinite,
    )
}

/// Canonical two-state instance: discount 9/10, `a` = 6/5.
pub fn two_state_default() -> MarkovModel<Exact> {
    two_state(q(9, 10), q(6, 5))
}

/// Five-state chain on `{0, ..., 4}`; 0 is the exit, 3 and 4 are absorbing
/// with payoffs 0 and `b`, and the agents at states 1 and 2 alternate.
///
/// States 3 and 4 are declared forced stops.
pub fn minnie_donald(discount: Exact, a: Exact, b: Exact, initial: usize) -> MarkovModel<Exact> {
    assert!(initial == 1 || initial == 2, "initial state must be 1 or 2");
    try_minnie_donald(discount, a, b, initial)
        .expect("five-state parameters must give a valid chain")
}

/// Fallible form of [`minnie_donald`]; `initial` must be a state label.
pub fn try_minnie_donald(
    discount: Exact,
    a: Exact,
    b: Exact,
    initial: usize,
) -> Result<MarkovModel<Exact>, ModelError> {
    let z = || q(0, 1);
    MarkovModel::new(
        (0..5).map(|i| i.to_string()).collect(),
        initial,
        vec![
            vec![q(1, 1), z(), z(), z(), z()],
            vec![z(), z(), q(1, 2), q(1, 2), z()],
            vec![q(1, 10), q(1, 10), z(), q(4, 10), q(4, 10)],
            vec![z(), z(), z(), q(1, 1), z()],
            vec![z(), z(), z(), z(), q(1, 1)],
        ],
        vec![false, true, true, true, true],
        vec![None, Some(a), Some(q(2, 1)), Some(z()), Some(b)],
        discount,
        Horizon::Infinite,
    )
    .map(|m| m.with_forced_stop(&[3, 4]))
}

/// Canonical parameters: discount 999/1000, `a` = 96/100, `b` = 4257/1000.
pub fn minnie_donald_default(initial: usize) -> MarkovModel<Exact> {
    minnie_donald(q(999, 1000), q(96, 100), q(4257, 1000), initial)
}

/// The four homogeneous stop regions `R_1..R_4` of the five-state chain,
/// listed as membership vectors over states `0..5`.
pub fn minnie_donald_regions() -> [Vec<bool>; 4] {
    let set = |xs: &[usize]| (0..5).map(|x| xs.contains(&x)).collect::<Vec<_>>();
    [
        set(&[0, 1, 2, 3, 4]),
        set(&[0, 2, 3, 4]),
        set(&[0, 3, 4]),
        set(&[0, 1, 3, 4]),
    ]
}

/// Named built-in model.
#[derive(Clone, Debug)]
pub enum Builtin {
    Tree(AtomTree<Exact>),
    Markov(MarkovModel<Exact>),
}

pub const BUILTIN_NAMES: [&str; 3] = ["binomial", "two-state", "minnie-donald"];

pub fn builtin(name: &str) -> Option<Builtin> {
    match name {
        "binomial" => Some(Builtin::Tree(binomial_tree())),
        "two-state" => Some(Builtin::Markov(two_state_default())),
        "minnie-donald" => Some(Builtin::Markov(minnie_donald_default(1))),
        _ => None,
    }
}

/// Converts a built-in exact tree to another scalar type.
pub fn convert_tree<S: Scalar>(tree: &AtomTree<Exact>) -> AtomTree<S> {
    tree.map_scalar(S::from_rational)
}

/// Converts a built-in exact model to another scalar type.
pub fn convert_model<S: Scalar>(model: &MarkovModel<Exact>) -> MarkovModel<S> {
    model.map_scalar(S::from_rational)
}

/// The period-4 equilibria `θ^1..θ^4` of the five-state chain; `θ^i` is
/// `θ^1` shifted by `i - 1` steps.
pub fn minnie_donald_theta(i: usize) -> crate::infinite::PeriodicMarkovPolicy {
    assert!((1..=4).contains(&i), "index must be 1 to 4");
    let [r1, r2, r3, r4] = minnie_donald_regions();
    crate::infinite::PeriodicMarkovPolicy::new(vec![r4, r3, r2, r1]).shift(i - 1)
}
