use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("not a rational literal: {0:?}")]
pub struct ParseScalarError(pub String);

/// Structural problems with a tree or Markov model.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("horizon must be a positive integer")]
    NonPositiveHorizon,
    #[error("model has no states")]
    NoStates,
    #[error("unknown state {0:?}")]
    UnknownState(String),
    #[error("duplicate state or atom id {0:?}")]
    Duplicate(String),
    #[error("transition row of state {state:?} sums to {sum}, not 1")]
    RowSum { state: String, sum: String },
    #[error("negative transition probability from {from:?} to {to:?}")]
    NegativeProbability { from: String, to: String },
    #[error("initial state {0:?} is not in the domain")]
    InitialOutsideDomain(String),
    #[error("payoff for state {0:?} must be given exactly on the domain")]
    PayoffDomainMismatch(String),
    #[error("discount must lie in (0, 1], got {0}")]
    Discount(String),
    #[error("atom {0:?}: branch probability must be positive")]
    NonPositiveBranch(String),
    #[error("children of atom {atom:?} have probabilities summing to {sum}, not 1")]
    ChildSum { atom: String, sum: String },
    #[error("atom {0:?}: in-domain atom below an out-of-domain parent")]
    DomainNotMonotone(String),
    #[error("atom {0:?}: payoff must be present exactly when the atom is in the domain")]
    PayoffPresence(String),
    #[error("atom {0:?}: unknown parent")]
    UnknownParent(String),
    #[error("tree must have exactly one root, found {0}")]
    RootCount(usize),
    #[error("root atom must be in the domain")]
    RootOutsideDomain,
    #[error("atom {0:?} lies below the horizon")]
    TooDeep(String),
    #[error("atom {0:?} at level below the horizon has no children")]
    MissingChildren(String),
    #[error("operation requires a finite horizon")]
    InfiniteHorizon,
    #[error("operation requires an infinite-horizon model")]
    FiniteHorizon,
    #[error("time-dependent payoffs are not supported by stationary policy evaluation")]
    TimeDependentPayoff,
    #[error(transparent)]
    Parse(#[from] ParseScalarError),
}

/// Failures of the solver operations.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("policy does not cover the tree: expected {expected} decisions, got {got}")]
    PolicyShape { expected: usize, got: usize },
    #[error("policy is not admissible at atom {atom:?}: {reason}")]
    Inadmissible { atom: String, reason: String },
    #[error("atom {0:?} is at or past the effective horizon; no continuation value exists")]
    PastEffectiveHorizon(String),
    #[error("search space of {count} candidates exceeds the size guard {guard}")]
    SizeGuard { count: String, guard: u64 },
    #[error("policy is not an equilibrium with early stopping preference (atom {0:?})")]
    NotEarlyEquilibrium(String),
    #[error("pair fails Snell pair verification: {0}")]
    UnverifiedPair(String),
    #[error("undiscounted model whose continuation region is not certified transient")]
    NotTransient,
    #[error(
        "periodic policy inadmissible at state {state:?}, phase {phase}: survival probability is 0"
    )]
    PeriodicInadmissible { state: String, phase: usize },
    #[error("singular linear system")]
    Singular,
    #[error("invalid argument: {0}")]
    Invalid(String),
}
