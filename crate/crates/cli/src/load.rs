use std::path::Path;

use condstop::examples::{
    binomial_tree, builtin, convert_model, convert_tree, try_minnie_donald, try_two_state, Builtin,
    BUILTIN_NAMES,
};
use condstop::io::{markov_to_json, parse_model, tree_to_json, Model};
use condstop::random::{random_markov, random_tree, TreeConfig};
use condstop::scalar::parse_rational;
use condstop::{unroll, AtomTree, Exact, Horizon, MarkovModel, Scalar};
use num_bigint::BigUint;
use sha2::{Digest, Sha256};

use crate::report::{CliError, ModelInfo, EXIT_GUARD};
use crate::Params;

/// Atoms an unrolled tree may have before the size guard trips.
pub const DEFAULT_UNROLL_GUARD: u64 = 1 << 20;

/// Size guard from `CONDSTOP_SIZE_GUARD`, or `default` when unset.
pub fn size_guard(default: u64) -> Result<u64, CliError> {
    match std::env::var("CONDSTOP_SIZE_GUARD") {
        Ok(text) => text.trim().parse().map_err(|_| {
            CliError::usage(format!(
                "CONDSTOP_SIZE_GUARD must be a nonnegative integer, got {text:?}"
            ))
        }),
        Err(_) => Ok(default),
    }
}

fn rational(flag: &str, text: &str) -> Result<Exact, CliError> {
    parse_rational(text)
        .map_err(|_| CliError::usage(format!("--{flag}: not a rational literal: {text:?}")))
}

fn params_given(p: &Params) -> bool {
    p.discount.is_some()
        || p.a.is_some()
        || p.b.is_some()
        || p.row2.is_some()
        || p.initial.is_some()
}

/// Materializes a built-in model with optional parameter overrides.
pub fn builtin_with(name: &str, p: &Params) -> Result<Model, CliError> {
    let q = |n: i64, d: i64| Exact::new(n.into(), d.into());
    let pick = |flag: &str, value: &Option<String>, default: Exact| match value {
        Some(text) => rational(flag, text),
        None => Ok(default),
    };
    match name {
        "binomial" => {
            if params_given(p) {
                return Err(CliError::usage("the binomial tree takes no parameters"));
            }
            Ok(Model::Tree(binomial_tree()))
        }
        "two-state" => {
            if p.b.is_some() || p.initial.is_some() {
                return Err(CliError::usage(
                    "the two-state chain takes --discount, --a and --row2 only",
                ));
            }
            let row = match &p.row2 {
                Some(text) => {
                    let parts: Vec<&str> = text.split(',').collect();
                    if parts.len() != 3 {
                        return Err(CliError::usage(
                            "--row2 needs three comma-separated probabilities",
                        ));
                    }
                    [
                        rational("row2", parts[0])?,
                        rational("row2", parts[1])?,
                        rational("row2", parts[2])?,
                    ]
                }
                None => [q(1, 3), q(1, 3), q(1, 3)],
            };
            let delta = pick("discount", &p.discount, q(9, 10))?;
            let a = pick("a", &p.a, q(6, 5))?;
            Ok(Model::Markov(try_two_state(delta, a, row)?))
        }
        "minnie-donald" => {
            if p.row2.is_some() {
                return Err(CliError::usage(
                    "the five-state chain takes --discount, --a, --b and --initial only",
                ));
            }
            let delta = pick("discount", &p.discount, q(999, 1000))?;
            let a = pick("a", &p.a, q(96, 100))?;
            let b = pick("b", &p.b, q(4257, 1000))?;
            let initial = p.initial.unwrap_or(1);
            if initial != 1 && initial != 2 {
                return Err(CliError::usage("--initial must be 1 or 2"));
            }
            Ok(Model::Markov(try_minnie_donald(delta, a, b, initial)?))
        }
        _ => match builtin(name) {
            Some(Builtin::Tree(t)) => Ok(Model::Tree(t)),
            Some(Builtin::Markov(m)) => Ok(Model::Markov(m)),
            None => Err(CliError::usage(format!(
                "unknown built-in {name:?}; expected one of {}",
                BUILTIN_NAMES.join(", ")
            ))),
        },
    }
}

fn seed(text: &str) -> Result<u64, CliError> {
    text.parse()
        .map_err(|_| CliError::usage(format!("seed must be an integer, got {text:?}")))
}

/// Reads the `--model` argument.
pub fn read_model(spec: &str, params: &Params) -> Result<Model, CliError> {
    let name = spec.strip_prefix("builtin:");
    if let Some(name) = name.or_else(|| BUILTIN_NAMES.contains(&spec).then_some(spec)) {
        return builtin_with(name, params);
    }
    if params_given(params) {
        return Err(CliError::usage(
            "parameter overrides apply to built-in models only",
        ));
    }
    if let Some(s) = spec.strip_prefix("random:") {
        return Ok(Model::Tree(random_tree(seed(s)?, &TreeConfig::default())));
    }
    if let Some(s) = spec.strip_prefix("random-markov:") {
        return Ok(Model::Markov(random_markov(seed(s)?, 6)));
    }
    let text = std::fs::read_to_string(Path::new(spec))
        .map_err(|e| CliError::usage(format!("cannot read model file {spec:?}: {e}")))?;
    Ok(parse_model(&text)?)
}

pub fn model_json(model: &Model) -> serde_json::Value {
    match model {
        Model::Tree(t) => tree_to_json(t),
        Model::Markov(m) => markov_to_json(m),
    }
}

pub fn digest(model: &Model) -> String {
    hex::encode(Sha256::digest(model_json(model).to_string().as_bytes()))
}

pub fn info(spec: &str, model: &Model) -> ModelInfo {
    let kind = match model {
        Model::Tree(t) => format!("tree, horizon {}, {} atoms", t.horizon(), t.len()),
        Model::Markov(m) => match m.horizon() {
            Horizon::Finite(t) => format!("markov, {} states, horizon {t}", m.n_states()),
            Horizon::Infinite => format!("markov, {} states, infinite horizon", m.n_states()),
        },
    };
    ModelInfo {
        source: spec.to_string(),
        kind,
        sha256: digest(model),
    }
}

/// Number of atoms `unroll(model, horizon)` would create.
pub fn unrolled_size(model: &MarkovModel<Exact>, horizon: usize) -> BigUint {
    let n = model.n_states();
    let mut paths = vec![BigUint::from(0u8); n];
    paths[model.initial()] = BigUint::from(1u8);
    let mut exits = BigUint::from(0u8);
    let mut total = BigUint::from(1u8);
    for _ in 0..horizon {
        let mut next = vec![BigUint::from(0u8); n];
        let mut next_exits = exits.clone();
        for x in 0..n {
            if paths[x] == BigUint::from(0u8) {
                continue;
            }
            let mut leaves = false;
            for y in 0..n {
                if model.prob(x, y).is_zero() {
                    continue;
                }
                if model.in_domain(y) {
                    next[y] += &paths[x];
                } else {
                    leaves = true;
                }
            }
            if leaves {
                next_exits += &paths[x];
            }
        }
        paths = next;
        exits = next_exits;
        total += paths.iter().sum::<BigUint>() + &exits;
    }
    total
}

/// A loaded model in the working scalar type, with the tree the finite
/// commands operate on when one is available.
pub struct Context<S> {
    pub info: ModelInfo,
    pub markov: Option<MarkovModel<S>>,
    pub tree: Option<AtomTree<S>>,
    /// Why no tree is available.
    tree_error: Option<String>,
}

impl<S: Scalar> Context<S> {
    pub fn new(spec: &str, params: &Params, horizon: Option<usize>) -> Result<Self, CliError> {
        let exact = read_model(spec, params)?;
        let info = info(spec, &exact);
        let (markov, tree, tree_error) = match &exact {
            Model::Tree(t) => {
                if let Some(h) = horizon.filter(|&h| h != t.horizon()) {
                    return Err(CliError::usage(format!(
                        "tree has horizon {}, not {h}",
                        t.horizon()
                    )));
                }
                (None, Some(convert_tree::<S>(t)), None)
            }
            Model::Markov(m) => {
                let n = match (horizon, m.horizon()) {
                    (Some(h), Horizon::Finite(t)) if h > t => {
                        return Err(CliError::usage(format!(
                            "--horizon {h} exceeds the model horizon {t}"
                        )));
                    }
                    (Some(0), _) => return Err(CliError::usage("--horizon must be positive")),
                    (Some(h), _) => Some(h),
                    (None, Horizon::Finite(t)) => Some(t),
                    (None, Horizon::Infinite) => None,
                };
                match n {
                    Some(n) => {
                        let size = unrolled_size(m, n);
                        let guard = size_guard(DEFAULT_UNROLL_GUARD)?;
                        if size > BigUint::from(guard) {
                            return Err(CliError {
                                code: EXIT_GUARD,
                                message: format!(
                                    "unrolled tree has {size} atoms, above the size guard {guard}"
                                ),
                            });
                        }
                        let converted = convert_model::<S>(m);
                        let tree = unroll(&converted, n)?;
                        (Some(converted), Some(tree), None)
                    }
                    None => (
                        Some(convert_model::<S>(m)),
                        None,
                        Some(
                            "infinite-horizon chain: pass --horizon N for a finite truncation"
                                .to_string(),
                        ),
                    ),
                }
            }
        };
        Ok(Context {
            info,
            markov,
            tree,
            tree_error,
        })
    }

    pub fn tree(&self) -> Result<&AtomTree<S>, CliError> {
        self.tree
            .as_ref()
            .ok_or_else(|| CliError::usage(self.tree_error.clone().unwrap_or_default()))
    }

    pub fn markov(&self) -> Result<&MarkovModel<S>, CliError> {
        self.markov
            .as_ref()
            .ok_or_else(|| CliError::usage("this operation needs a Markov model"))
    }

    /// Whether a periodic operation is requested: an explicit period, or an
    /// infinite-horizon chain without a truncation.
    pub fn periodic(&self, period: Option<usize>) -> bool {
        period.is_some() || (self.markov.is_some() && self.tree.is_none())
    }
}
