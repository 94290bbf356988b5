//! Infinite-horizon Markov models: growth condition, exact evaluation of
//! periodic Markov policies, the best-response map on that class, periodic
//! equilibrium enumeration and finite-horizon truncation limits.

mod enumerate;
pub mod linalg;
mod truncation;

pub use enumerate::{enumerate_periodic_equilibria, PeriodicEquilibrium, PeriodicFilter};
pub use truncation::{
    solve_markov_finite, truncation_limit, MarkovFiniteSolution, TruncationReport,
};

use crate::error::{ModelError, SolveError};
use crate::model::{Horizon, MarkovModel};
use crate::policy::best_response;
use crate::scalar::Scalar;

/// Stop at time `t` in state `x` iff `x` lies in `regions[t mod period]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PeriodicMarkovPolicy {
    regions: Vec<Vec<bool>>,
}

impl PeriodicMarkovPolicy {
    /// One membership vector per phase.
    pub fn new(regions: Vec<Vec<bool>>) -> Self {
        assert!(!regions.is_empty(), "period must be at least 1");
        PeriodicMarkovPolicy { regions }
    }

    pub fn homogeneous(region: Vec<bool>) -> Self {
        PeriodicMarkovPolicy {
            regions: vec![region],
        }
    }

    pub fn from_sets(n_states: usize, sets: &[Vec<usize>]) -> Self {
        PeriodicMarkovPolicy::new(
            sets.iter()
                .map(|set| (0..n_states).map(|x| set.contains(&x)).collect())
                .collect(),
        )
    }

    pub fn period(&self) -> usize {
        self.regions.len()
    }

    pub fn regions(&self) -> &[Vec<bool>] {
        &self.regions
    }

    pub fn stops(&self, t: usize, state: usize) -> bool {
        self.regions[t % self.period()][state]
    }

    /// The policy `t ↦ f(t + k, ·)`.
    pub fn shift(&self, k: usize) -> Self {
        let p = self.period();
        PeriodicMarkovPolicy {
            regions: (0..p)
                .map(|phi| self.regions[(phi + k) % p].clone())
                .collect(),
        }
    }

    /// Same policy written with a period that is a multiple of the current one.
    pub fn with_period(&self, period: usize) -> Self {
        assert!(
            period.is_multiple_of(self.period()),
            "new period must be a multiple"
        );
        PeriodicMarkovPolicy {
            regions: (0..period)
                .map(|phi| self.regions[phi % self.period()].clone())
                .collect(),
        }
    }

    /// Adds exit states, forced stops and dead ends to every region.
    pub fn normalized<S: Scalar>(&self, model: &MarkovModel<S>) -> Self {
        let mut out = self.clone();
        for region in &mut out.regions {
            for (x, bit) in region.iter_mut().enumerate() {
                if pinned(model, x) {
                    *bit = true;
                }
            }
        }
        out
    }

    fn check_shape<S: Scalar>(&self, model: &MarkovModel<S>) -> Result<(), SolveError> {
        if let Some(bad) = self.regions.iter().find(|r| r.len() != model.n_states()) {
            return Err(SolveError::PolicyShape {
                expected: model.n_states(),
                got: bad.len(),
            });
        }
        Ok(())
    }
}

/// States where every agent must stop: outside the domain, declared forced
/// stops, and domain states that leave the domain surely.
pub(crate) fn pinned<S: Scalar>(model: &MarkovModel<S>, x: usize) -> bool {
    !model.in_domain(x) || model.forced_stop()[x] || model.dead_end(x)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub(crate) fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// Domain pairs `(phase, state)` visited with positive probability before
/// exit, starting from the initial state at phase 0.
pub fn reachable<S: Scalar>(model: &MarkovModel<S>, period: usize) -> Vec<Vec<bool>> {
    let n = model.n_states();
    let mut seen = vec![vec![false; n]; period];
    let x0 = model.initial();
    seen[0][x0] = true;
    let mut stack = vec![(0usize, x0)];
    while let Some((phi, x)) = stack.pop() {
        let next = (phi + 1) % period;
        for y in 0..n {
            if model.in_domain(y) && !model.prob(x, y).is_zero() && !seen[next][y] {
                seen[next][y] = true;
                stack.push((next, y));
            }
        }
    }
    seen
}

/// Whether two policies agree on every reachable domain pair.
pub fn agree_on_reachable<S: Scalar>(
    model: &MarkovModel<S>,
    a: &PeriodicMarkovPolicy,
    b: &PeriodicMarkovPolicy,
) -> bool {
    let period = lcm(a.period(), b.period());
    let seen = reachable(model, period);
    let (a, b) = (a.normalized(model), b.normalized(model));
    (0..period).all(|phi| {
        (0..model.n_states()).all(|x| !seen[phi][x] || a.stops(phi, x) == b.stops(phi, x))
    })
}

/// Discount-normalized numerator, survival probability and continuation
/// value of a periodic policy, indexed `[phase][state]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyEvaluation<S> {
    pub period: usize,
    /// `E[δ^{L-t} g(X_L) 1{L < σ} | X_t = x]` for an agent at phase `t mod p`.
    pub h: Vec<Vec<Option<S>>>,
    /// `P(L ⊲ σ | X_t = x)`.
    pub p: Vec<Vec<S>>,
    /// `h / p` where `p > 0`.
    pub j: Vec<Vec<Option<S>>>,
    pub reachable: Vec<Vec<bool>>,
}

fn require_stationary<S: Scalar>(model: &MarkovModel<S>) -> Result<(), SolveError> {
    if model.horizon() != Horizon::Infinite {
        return Err(ModelError::FiniteHorizon.into());
    }
    if model.has_time_payoffs() {
        return Err(ModelError::TimeDependentPayoff.into());
    }
    Ok(())
}

/// Nodes of `cont` (indexed `phase * n + state`) from which the chain can
/// reach a node satisfying `target` while passing only through `cont`.
fn can_reach(
    n: usize,
    period: usize,
    edges: &dyn Fn(usize, usize) -> bool,
    cont: &[bool],
    target: &dyn Fn(usize, usize) -> bool,
) -> Vec<bool> {
    let mut ok = vec![false; n * period];
    loop {
        let mut changed = false;
        for phi in 0..period {
            for x in 0..n {
                let i = phi * n + x;
                if !cont[i] || ok[i] {
                    continue;
                }
                let next = (phi + 1) % period;
                let hit = (0..n).any(|y| {
                    edges(x, y) && (target(next, y) || (cont[next * n + y] && ok[next * n + y]))
                });
                if hit {
                    ok[i] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            return ok;
        }
    }
}

/// Evaluates a periodic policy exactly on the product chain `(state, phase)`.
///
/// `q = 1 - p` is the minimal nonnegative solution of the system for "exit
/// at or before the next stop", and `h` solves its discounted one-step
/// recursion. An undiscounted model is accepted only when every continuation
/// node leaves the continuation region with positive probability.
pub fn evaluate<S: Scalar>(
    model: &MarkovModel<S>,
    policy: &PeriodicMarkovPolicy,
) -> Result<PolicyEvaluation<S>, SolveError> {
    require_stationary(model)?;
    policy.check_shape(model)?;
    let policy = policy.normalized(model);
    let n = model.n_states();
    let period = policy.period();
    let delta = model.discount().clone();
    let edges = |x: usize, y: usize| !model.prob(x, y).is_zero();
    let cont: Vec<bool> = (0..period * n)
        .map(|i| model.in_domain(i % n) && !policy.stops(i / n, i % n))
        .collect();

    // Exit probability before the next stop.
    let exits = can_reach(n, period, &edges, &cont, &|_, y| !model.in_domain(y));
    let q_nodes: Vec<usize> = (0..period * n).filter(|&i| cont[i] && exits[i]).collect();
    let q_values = solve_on(model, period, &q_nodes, S::one(), |_, y| {
        if model.in_domain(y) {
            S::zero()
        } else {
            S::one()
        }
    })?;

    // Discounted payoff at the next stop.
    if delta.same(&S::one()) {
        let leaves = can_reach(n, period, &edges, &cont, &|phi, y| !cont[phi * n + y]);
        if (0..period * n).any(|i| cont[i] && !leaves[i]) {
            return Err(SolveError::NotTransient);
        }
    }
    let h_nodes: Vec<usize> = (0..period * n).filter(|&i| cont[i]).collect();
    let h_values = solve_on(
        model,
        period,
        &h_nodes,
        delta.clone(),
        |phi, y| match model.g(y) {
            Some(g) if policy.stops(phi, y) => g.clone(),
            _ => S::zero(),
        },
    )?;

    let seen = reachable(model, period);
    let mut h = vec![vec![None; n]; period];
    let mut p = vec![vec![S::zero(); n]; period];
    let mut j = vec![vec![None; n]; period];
    for phi in 0..period {
        let next = (phi + 1) % period;
        for x in 0..n {
            if !model.in_domain(x) {
                continue;
            }
            let mut q = S::zero();
            let mut hx = S::zero();
            for y in 0..n {
                let pxy = model.prob(x, y);
                if pxy.is_zero() {
                    continue;
                }
                let k = next * n + y;
                if !model.in_domain(y) {
                    q = q + pxy.clone();
                } else if policy.stops(next, y) {
                    hx = hx + pxy.clone() * model.g(y).expect("domain payoff").clone();
                } else {
                    q = q + pxy.clone() * q_values[k].clone();
                    hx = hx + pxy.clone() * h_values[k].clone();
                }
            }
            let px = S::one() - q;
            let hx = delta.clone() * hx;
            if px.is_positive() {
                j[phi][x] = Some(hx.clone() / px.clone());
            } else if seen[phi][x] && !model.dead_end(x) {
                return Err(SolveError::PeriodicInadmissible {
                    state: model.states()[x].clone(),
                    phase: phi,
                });
            }
            h[phi][x] = Some(hx);
            p[phi][x] = px;
        }
    }
    Ok(PolicyEvaluation {
        period,
        h,
        p,
        j,
        reachable: seen,
    })
}

/// Solves `u_i = scale * Σ_y P(x_i, y) [r(phase', y) if y is not an unknown, else u_y]`
/// for the listed unknowns; entries of other nodes in the result are zero.
fn solve_on<S: Scalar>(
    model: &MarkovModel<S>,
    period: usize,
    nodes: &[usize],
    scale: S,
    reward: impl Fn(usize, usize) -> S,
) -> Result<Vec<S>, SolveError> {
    let n = model.n_states();
    let mut index = vec![usize::MAX; period * n];
    for (k, &i) in nodes.iter().enumerate() {
        index[i] = k;
    }
    let m = nodes.len();
    let mut a = vec![vec![S::zero(); m]; m];
    let mut b = vec![S::zero(); m];
    for (k, &i) in nodes.iter().enumerate() {
        let (phi, x) = (i / n, i % n);
        let next = (phi + 1) % period;
        a[k][k] = S::one();
        for y in 0..n {
            let pxy = model.prob(x, y);
            if pxy.is_zero() {
                continue;
            }
            let j = next * n + y;
            if index[j] != usize::MAX {
                let c = a[k][index[j]].clone() - scale.clone() * pxy.clone();
                a[k][index[j]] = c;
            } else {
                b[k] = b[k].clone() + scale.clone() * pxy.clone() * reward(next, y);
            }
        }
    }
    let x = linalg::solve(a, b)?;
    let mut out = vec![S::zero(); period * n];
    for (k, &i) in nodes.iter().enumerate() {
        out[i] = x[k].clone();
    }
    Ok(out)
}

/// Applies the best-response map to a periodic policy.
///
/// Each domain agent compares `g(x)` with the discount-normalized
/// continuation value; indifferent agents keep their bit, and pairs without
/// a continuation value keep theirs as well.
pub fn phi_markov<S: Scalar>(
    model: &MarkovModel<S>,
    policy: &PeriodicMarkovPolicy,
) -> Result<PeriodicMarkovPolicy, SolveError> {
    let eval = evaluate(model, policy)?;
    let policy = policy.normalized(model);
    let regions = (0..policy.period())
        .map(|phi| {
            (0..model.n_states())
                .map(|x| {
                    if pinned(model, x) {
                        return true;
                    }
                    match (&eval.j[phi][x], model.g(x)) {
                        (Some(j), Some(g)) => best_response(g, j, policy.stops(phi, x)),
                        _ => policy.stops(phi, x),
                    }
                })
                .collect()
        })
        .collect();
    Ok(PeriodicMarkovPolicy::new(regions))
}

/// Pairs where a periodic policy violates the equilibrium condition.
pub fn periodic_deviations<S: Scalar>(
    model: &MarkovModel<S>,
    policy: &PeriodicMarkovPolicy,
) -> Result<Vec<(usize, usize)>, SolveError> {
    let updated = phi_markov(model, policy)?;
    let policy = policy.normalized(model);
    let seen = reachable(model, policy.period());
    let mut out = Vec::new();
    for phi in 0..policy.period() {
        for x in 0..model.n_states() {
            if seen[phi][x] && updated.stops(phi, x) != policy.stops(phi, x) {
                out.push((phi, x));
            }
        }
    }
    Ok(out)
}

/// Checks `P(∃t: G_t ≥ 0) > 0` and that `c^t G_t` is bounded above.
pub fn check_growth<S: Scalar>(model: &MarkovModel<S>, c: &S) -> Result<bool, SolveError> {
    if c.compare(&S::one()) != std::cmp::Ordering::Greater {
        return Err(SolveError::Invalid("growth constant must exceed 1".into()));
    }
    if model.horizon() != Horizon::Infinite {
        return Err(ModelError::FiniteHorizon.into());
    }
    let n = model.n_states();
    let seen = reachable(model, 1);
    let reach = |x: usize| seen[0][x];

    let mut nonnegative = (0..n).any(|x| reach(x) && model.g(x).is_some_and(|g| !g.is_negative()));
    if !nonnegative && model.has_time_payoffs() {
        let horizon = model
            .time_payoffs()
            .keys()
            .map(|(t, _)| *t)
            .max()
            .unwrap_or(0);
        let mut at = vec![false; n];
        at[model.initial()] = true;
        for t in 0..=horizon {
            if model
                .time_payoffs()
                .iter()
                .any(|(&(s, x), g)| s == t && at[x] && !g.is_negative())
            {
                nonnegative = true;
                break;
            }
            let mut next = vec![false; n];
            for x in (0..n).filter(|&x| at[x]) {
                for y in 0..n {
                    if model.in_domain(y) && !model.prob(x, y).is_zero() {
                        next[y] = true;
                    }
                }
            }
            at = next;
        }
    }
    if !nonnegative {
        return Ok(false);
    }
    if (c.clone() * model.discount().clone()).compare(&S::one()) != std::cmp::Ordering::Greater {
        return Ok(true);
    }
    // With cδ > 1 the bound needs every positive payoff to be visited at
    // finitely many times only.
    let domain_edge = |x: usize, y: usize| {
        model.in_domain(x) && model.in_domain(y) && !model.prob(x, y).is_zero()
    };
    let mut on_cycle = vec![false; n];
    for x in (0..n).filter(|&x| reach(x)) {
        let mut seen_from = vec![false; n];
        let mut stack: Vec<usize> = (0..n).filter(|&y| domain_edge(x, y)).collect();
        while let Some(y) = stack.pop() {
            if seen_from[y] {
                continue;
            }
            seen_from[y] = true;
            stack.extend((0..n).filter(|&z| domain_edge(y, z)));
        }
        on_cycle[x] = seen_from[x];
    }
    let mut recurrent_reach = vec![false; n];
    let mut stack: Vec<usize> = (0..n).filter(|&x| on_cycle[x]).collect();
    while let Some(x) = stack.pop() {
        if recurrent_reach[x] {
            continue;
        }
        recurrent_reach[x] = true;
        stack.extend((0..n).filter(|&y| domain_edge(x, y)));
    }
    Ok(!(0..n).any(|x| recurrent_reach[x] && model.g(x).is_some_and(|g| g.is_positive())))
}

/// One inequality of the five-state example's parameter conditions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Condition {
    pub group: usize,
    pub text: &'static str,
    pub holds: bool,
}

/// Evaluates the parameter conditions of the five-state chain.
///
/// Group 0 is the ordering `0 < a < δ < 1 < 2 < b`; groups 1 to 3 are the
/// three inequality groups.
pub fn check_minnie_donald_conditions<S: Scalar>(delta: &S, a: &S, b: &S) -> Vec<Condition> {
    let num = |n: i64, d: i64| S::from_int(n) / S::from_int(d);
    let lt = |x: &S, y: &S| x.compare(y) == std::cmp::Ordering::Less;
    let d = delta.clone();
    let d2 = d.clone() * d.clone();
    let d3 = d2.clone() * d.clone();
    let four_b = num(4, 1) * b.clone();

    let g2b_lhs = num(1, 100) * d3.clone() * (num(5, 1) * a.clone()).min_of(b.clone() * d2.clone())
        + num(2, 10) * b.clone() * d3.clone()
        + four_b.clone() * d.clone();
    let g3_lhs =
        d2.clone() * (d.clone().max_of(num(1, 4) * b.clone() * d2.clone()) + four_b.clone());

    vec![
        Condition {
            group: 0,
            text: "0 < a < δ < 1 < 2 < b",
            holds: a.is_positive() && lt(a, &d) && lt(&d, &S::one()) && lt(&num(2, 1), b),
        },
        Condition {
            group: 1,
            text: "a < δ",
            holds: lt(a, &d),
        },
        Condition {
            group: 1,
            text: "δ(a + 4b) < 18",
            holds: lt(&(d.clone() * (a.clone() + four_b.clone())), &num(18, 1)),
        },
        Condition {
            group: 2,
            text: "δ(δ + 4b) > 18",
            holds: lt(&num(18, 1), &(d.clone() * (d.clone() + four_b))),
        },
        Condition {
            group: 2,
            text: "0.01δ³min(5a, bδ²) + 0.2bδ³ + 4bδ > 17.9",
            holds: lt(&num(179, 10), &g2b_lhs),
        },
        Condition {
            group: 3,
            text: "δ²(max(δ, 0.25bδ²) + 4b) < 18.9a",
            holds: lt(&g3_lhs, &(num(189, 10) * a.clone())),
        },
    ]
}
