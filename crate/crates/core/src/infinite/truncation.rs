use std::cmp::Ordering;

use super::{periodic_deviations, PeriodicMarkovPolicy};
use crate::error::{ModelError, SolveError};
use crate::model::{Horizon, MarkovModel};
use crate::scalar::Scalar;

/// Finite-horizon equilibrium of a Markov model computed on the state space,
/// indexed `[t][state]` for `t = 0..=horizon`.
///
/// Values carry the discount: `v[t][x] = V_t` on `{X_t = x}`.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovFiniteSolution<S> {
    pub horizon: usize,
    pub v: Vec<Vec<Option<S>>>,
    pub s: Vec<Vec<S>>,
    pub stop: Vec<Vec<bool>>,
    /// Domain states visited at time `t` with positive probability.
    pub reachable: Vec<Vec<bool>>,
}

/// The backward recursion for the equilibrium with early stopping
/// preference, run per state instead of per atom.
pub fn solve_markov_finite<S: Scalar>(
    model: &MarkovModel<S>,
    horizon: usize,
) -> MarkovFiniteSolution<S> {
    let n = model.n_states();
    let mut v = vec![vec![None; n]; horizon + 1];
    let mut s = vec![vec![S::zero(); n]; horizon + 1];
    let mut stop = vec![vec![true; n]; horizon + 1];
    for x in (0..n).filter(|&x| model.in_domain(x)) {
        v[horizon][x] = model.gain(horizon, x);
        s[horizon][x] = S::one();
    }
    for t in (0..horizon).rev() {
        for x in (0..n).filter(|&x| model.in_domain(x)) {
            let g = model.gain(t, x).expect("domain payoff");
            if model.dead_end(x) {
                v[t][x] = Some(g);
                s[t][x] = S::one();
                continue;
            }
            let (mut num, mut den) = (S::zero(), S::zero());
            for y in 0..n {
                let p = model.prob(x, y);
                if p.is_zero() || s[t + 1][y].is_zero() {
                    continue;
                }
                let vy = v[t + 1][y]
                    .clone()
                    .expect("positive survival implies a value");
                num = num + p.clone() * s[t + 1][y].clone() * vy;
                den = den + p.clone() * s[t + 1][y].clone();
            }
            let j = num / den.clone();
            if g.compare(&j) == Ordering::Less {
                v[t][x] = Some(j);
                s[t][x] = den;
                stop[t][x] = false;
            } else {
                v[t][x] = Some(g);
                s[t][x] = S::one();
            }
        }
    }
    let mut reachable = vec![vec![false; n]; horizon + 1];
    reachable[0][model.initial()] = true;
    for t in 0..horizon {
        for x in 0..n {
            if !reachable[t][x] {
                continue;
            }
            for y in 0..n {
                if model.in_domain(y) && !model.prob(x, y).is_zero() {
                    reachable[t + 1][y] = true;
                }
            }
        }
    }
    MarkovFiniteSolution {
        horizon,
        v,
        s,
        stop,
        reachable,
    }
}

/// Outcome of [`truncation_limit`].
#[derive(Clone, Debug, PartialEq)]
pub struct TruncationReport {
    pub max_horizon: usize,
    pub window: usize,
    /// Spacing of the horizons compared: `N, N - m, ..., N - (K-1) m`.
    pub stride: usize,
    /// Decisions are reported for `t < depth`.
    pub depth: usize,
    /// `decisions[t][x]`: the stabilized bit at reachable domain pairs,
    /// `None` elsewhere and where the horizons disagree.
    pub decisions: Vec<Vec<Option<bool>>>,
    pub unstable: Vec<(usize, usize)>,
    /// Periodic policy matching every stabilized decision, when one exists.
    pub candidate: Option<PeriodicMarkovPolicy>,
    /// Whether the candidate is a fixed point of the best-response map on
    /// reachable pairs; `None` when it could not be evaluated.
    pub verified: Option<bool>,
    pub verification_error: Option<SolveError>,
}

impl TruncationReport {
    pub fn stable(&self) -> bool {
        self.unstable.is_empty() && self.depth > 0
    }
}

/// Solves the horizon-`n` problems for `n = 1..=N` and looks for decisions
/// that agree along a subsequence of `K` equally spaced horizons ending at `N`.
///
/// The smallest spacing under which every reachable pair before the
/// reporting depth agrees is used; without one, spacing 1 is reported with
/// its unstable pairs.
pub fn truncation_limit<S: Scalar>(
    model: &MarkovModel<S>,
    max_horizon: usize,
    window: usize,
) -> Result<TruncationReport, SolveError> {
    if model.horizon() != Horizon::Infinite {
        return Err(ModelError::FiniteHorizon.into());
    }
    if max_horizon == 0 || window == 0 {
        return Err(SolveError::Invalid(
            "maximal horizon and window must be positive".into(),
        ));
    }
    let n_states = model.n_states();
    let solutions: Vec<MarkovFiniteSolution<S>> = (0..=max_horizon)
        .map(|n| solve_markov_finite(model, n.max(1)))
        .collect();
    let reach = &solutions[max_horizon].reachable;

    let unstable_for = |m: usize, depth: usize| -> Vec<(usize, usize)> {
        let horizons: Vec<usize> = (0..window).map(|k| max_horizon - k * m).collect();
        let mut out = Vec::new();
        for t in 0..depth {
            for x in (0..n_states).filter(|&x| reach[t][x]) {
                let first = solutions[horizons[0]].stop[t][x];
                if horizons.iter().any(|&h| solutions[h].stop[t][x] != first) {
                    out.push((t, x));
                }
            }
        }
        out
    };

    let depth_for = |m: usize| max_horizon.checked_sub((window - 1) * m).filter(|&d| d > 0);
    let mut chosen = None;
    let mut m = 1;
    while let Some(depth) = depth_for(m) {
        if unstable_for(m, depth).is_empty() {
            chosen = Some((m, depth));
            break;
        }
        if window == 1 {
            break;
        }
        m += 1;
    }
    let (stride, depth, unstable) = match chosen {
        Some((m, d)) => (m, d, Vec::new()),
        None => {
            let d = depth_for(1).unwrap_or(0);
            (1, d, unstable_for(1, d))
        }
    };

    let decisions: Vec<Vec<Option<bool>>> = (0..depth)
        .map(|t| {
            (0..n_states)
                .map(|x| {
                    if reach[t][x] && !unstable.contains(&(t, x)) {
                        Some(solutions[max_horizon].stop[t][x])
                    } else {
                        None
                    }
                })
                .collect()
        })
        .collect();

    let mut report = TruncationReport {
        max_horizon,
        window,
        stride,
        depth,
        decisions,
        unstable,
        candidate: None,
        verified: None,
        verification_error: None,
    };
    if !report.stable() {
        return Ok(report);
    }
    report.candidate = periodic_fit(&report.decisions, n_states);
    if let Some(candidate) = &report.candidate {
        match periodic_deviations(model, candidate) {
            Ok(dev) => report.verified = Some(dev.is_empty()),
            Err(e) => report.verification_error = Some(e),
        }
    }
    Ok(report)
}

/// Smallest period `p ≤ max(1, depth / 2)` whose phases carry consistent
/// decisions; pairs never observed stop.
fn periodic_fit(decisions: &[Vec<Option<bool>>], n_states: usize) -> Option<PeriodicMarkovPolicy> {
    let depth = decisions.len();
    for p in 1..=(depth / 2).max(1) {
        let mut regions: Vec<Vec<Option<bool>>> = vec![vec![None; n_states]; p];
        let mut consistent = true;
        'scan: for (t, row) in decisions.iter().enumerate() {
            for (x, bit) in row.iter().enumerate() {
                if let Some(b) = bit {
                    match regions[t % p][x] {
                        None => regions[t % p][x] = Some(*b),
                        Some(prev) if prev != *b => {
                            consistent = false;
                            break 'scan;
                        }
                        _ => {}
                    }
                }
            }
        }
        if consistent {
            return Some(PeriodicMarkovPolicy::new(
                regions
                    .into_iter()
                    .map(|r| r.into_iter().map(|b| b.unwrap_or(true)).collect())
                    .collect(),
            ));
        }
    }
    None
}
