use std::cmp::Ordering;

use num_bigint::BigUint;

use super::{evaluate, pinned, reachable, PeriodicMarkovPolicy, PolicyEvaluation};
use crate::error::SolveError;
use crate::model::MarkovModel;
use crate::scalar::Scalar;

/// How indifferent agents are treated by [`enumerate_periodic_equilibria`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PeriodicFilter {
    All,
    Early,
    Late,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicEquilibrium<S> {
    pub policy: PeriodicMarkovPolicy,
    pub evaluation: PolicyEvaluation<S>,
}

/// Lists every period-`p` Markov equilibrium, one representative per class
/// of policies that agree on all reachable pairs.
///
/// Only reachable domain pairs that are not pinned are free; every other
/// pair stops. Results are ordered by their region bitmasks.
pub fn enumerate_periodic_equilibria<S: Scalar>(
    model: &MarkovModel<S>,
    period: usize,
    filter: PeriodicFilter,
    guard: u64,
) -> Result<Vec<PeriodicEquilibrium<S>>, SolveError> {
    if period == 0 {
        return Err(SolveError::Invalid("period must be at least 1".into()));
    }
    let n = model.n_states();
    let seen = reachable(model, period);
    let free: Vec<(usize, usize)> = (0..period)
        .flat_map(|phi| (0..n).map(move |x| (phi, x)))
        .filter(|&(phi, x)| seen[phi][x] && !pinned(model, x))
        .collect();
    let candidates = BigUint::from(1u8) << free.len();
    if candidates > BigUint::from(guard) {
        return Err(SolveError::SizeGuard {
            count: candidates.to_string(),
            guard,
        });
    }

    let mut found = Vec::new();
    for mask in 0u64..(1u64 << free.len()) {
        let mut regions = vec![vec![true; n]; period];
        for (bit, &(phi, x)) in free.iter().enumerate() {
            regions[phi][x] = mask >> bit & 1 == 1;
        }
        let policy = PeriodicMarkovPolicy::new(regions);
        let evaluation = match evaluate(model, &policy) {
            Ok(e) => e,
            Err(SolveError::PeriodicInadmissible { .. }) => continue,
            Err(e) => return Err(e),
        };
        let holds = free.iter().all(|&(phi, x)| {
            let (Some(g), Some(j)) = (model.g(x), &evaluation.j[phi][x]) else {
                return false;
            };
            let stop = policy.stops(phi, x);
            match g.compare(j) {
                Ordering::Greater => stop,
                Ordering::Less => !stop,
                Ordering::Equal => match filter {
                    PeriodicFilter::All => true,
                    PeriodicFilter::Early => stop,
                    PeriodicFilter::Late => !stop,
                },
            }
        });
        if holds {
            found.push(PeriodicEquilibrium { policy, evaluation });
        }
    }
    found.sort_by(|a, b| a.policy.cmp(&b.policy));
    Ok(found)
}
