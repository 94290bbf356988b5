//! JSON formats for models, policies and Snell pairs. Every number is a
//! rational string such as `"3"`, `"-1/3"` or `"0.25"`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{ModelError, SolveError};
use crate::infinite::PeriodicMarkovPolicy;
use crate::model::{AtomTree, Horizon, MarkovModel, NodeSpec};
use crate::policy::StoppingPolicy;
use crate::recursion::SnellPair;
use crate::scalar::{parse_rational, Exact, Scalar};

/// A parsed model file.
#[derive(Clone, Debug)]
pub enum Model {
    Tree(AtomTree<Exact>),
    Markov(MarkovModel<Exact>),
}

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{0}")]
    Policy(String),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum HorizonJson {
    Finite(usize),
    Named(String),
}

#[derive(Serialize, Deserialize)]
struct TimePayoffJson {
    t: usize,
    state: String,
    value: String,
}

#[derive(Serialize, Deserialize)]
struct MarkovJson {
    states: Vec<String>,
    initial: String,
    transitions: Vec<Vec<String>>,
    domain: Vec<String>,
    payoff: BTreeMap<String, String>,
    discount: String,
    horizon: HorizonJson,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    forced_stop: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    payoff_by_time: Vec<TimePayoffJson>,
}

#[derive(Serialize, Deserialize)]
struct NodeJson {
    id: String,
    #[serde(default)]
    parent: Option<String>,
    #[serde(default)]
    prob: Option<String>,
    #[serde(default = "default_true")]
    in_domain: bool,
    #[serde(default)]
    payoff: Option<String>,
}

fn default_true() -> bool {
    true
}

#[derive(Serialize, Deserialize)]
struct TreeJson {
    horizon: usize,
    nodes: Vec<NodeJson>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum ModelJson {
    Tree(TreeJson),
    Markov(MarkovJson),
}

fn num(text: &str) -> Result<Exact, ModelError> {
    Ok(parse_rational(text)?)
}

fn state(states: &[String], label: &str) -> Result<usize, ModelError> {
    states
        .iter()
        .position(|s| s == label)
        .ok_or_else(|| ModelError::UnknownState(label.to_string()))
}

/// Parses a model file.
pub fn parse_model(text: &str) -> Result<Model, FormatError> {
    match serde_json::from_str::<ModelJson>(text)? {
        ModelJson::Tree(t) => {
            let nodes = t
                .nodes
                .into_iter()
                .map(|n| {
                    Ok(NodeSpec {
                        name: n.id,
                        parent: n.parent,
                        prob: match &n.prob {
                            Some(p) => num(p)?,
                            None => Exact::one(),
                        },
                        in_domain: n.in_domain,
                        payoff: n.payoff.as_deref().map(num).transpose()?,
                    })
                })
                .collect::<Result<Vec<_>, ModelError>>()?;
            Ok(Model::Tree(AtomTree::from_nodes(t.horizon, nodes)?))
        }
        ModelJson::Markov(m) => Ok(Model::Markov(markov_from_json(m)?)),
    }
}

fn markov_from_json(m: MarkovJson) -> Result<MarkovModel<Exact>, ModelError> {
    let states = m.states;
    let initial = state(&states, &m.initial)?;
    let transition = m
        .transitions
        .iter()
        .map(|row| row.iter().map(|p| num(p)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    let mut domain = vec![false; states.len()];
    for label in &m.domain {
        domain[state(&states, label)?] = true;
    }
    let mut payoff = vec![None; states.len()];
    for (label, value) in &m.payoff {
        payoff[state(&states, label)?] = Some(num(value)?);
    }
    let horizon = match m.horizon {
        HorizonJson::Finite(0) => return Err(ModelError::NonPositiveHorizon),
        HorizonJson::Finite(n) => Horizon::Finite(n),
        HorizonJson::Named(s) if s == "infinite" => Horizon::Infinite,
        HorizonJson::Named(_) => return Err(ModelError::NonPositiveHorizon),
    };
    let mut model = MarkovModel::new(
        states.clone(),
        initial,
        transition,
        domain,
        payoff,
        num(&m.discount)?,
        horizon,
    )?;
    let forced = m
        .forced_stop
        .iter()
        .map(|l| state(&states, l))
        .collect::<Result<Vec<_>, _>>()?;
    model = model.with_forced_stop(&forced);
    for tp in &m.payoff_by_time {
        model = model.with_time_payoff(tp.t, state(&states, &tp.state)?, num(&tp.value)?)?;
    }
    Ok(model)
}

/// Serializes a tree in the format read by [`parse_model`].
pub fn tree_to_json<S: Scalar>(tree: &AtomTree<S>) -> Value {
    let nodes: Vec<Value> = tree
        .atoms()
        .iter()
        .map(|a| {
            let mut node = json!({ "id": a.name, "in_domain": a.in_domain });
            if let Some(p) = a.parent {
                node["parent"] = json!(tree.name(p));
                node["prob"] = json!(a.branch_prob.to_canonical_string());
            }
            if let Some(g) = &a.payoff {
                node["payoff"] = json!(g.to_canonical_string());
            }
            node
        })
        .collect();
    json!({ "type": "tree", "horizon": tree.horizon(), "nodes": nodes })
}

/// Serializes a Markov model in the format read by [`parse_model`].
pub fn markov_to_json<S: Scalar>(model: &MarkovModel<S>) -> Value {
    let states = model.states();
    let label = |x: usize| states[x].clone();
    let n = model.n_states();
    let m = MarkovJson {
        states: states.to_vec(),
        initial: label(model.initial()),
        transitions: model
            .transition()
            .iter()
            .map(|r| r.iter().map(|p| p.to_canonical_string()).collect())
            .collect(),
        domain: (0..n).filter(|&x| model.in_domain(x)).map(label).collect(),
        payoff: (0..n)
            .filter_map(|x| model.g(x).map(|g| (label(x), g.to_canonical_string())))
            .collect(),
        discount: model.discount().to_canonical_string(),
        horizon: match model.horizon() {
            Horizon::Finite(t) => HorizonJson::Finite(t),
            Horizon::Infinite => HorizonJson::Named("infinite".into()),
        },
        forced_stop: (0..n)
            .filter(|&x| model.forced_stop()[x])
            .map(label)
            .collect(),
        payoff_by_time: model
            .time_payoffs()
            .iter()
            .map(|(&(t, x), v)| TimePayoffJson {
                t,
                state: label(x),
                value: v.to_canonical_string(),
            })
            .collect(),
    };
    let mut value = serde_json::to_value(m).expect("serializable");
    value
        .as_object_mut()
        .expect("object")
        .insert("type".into(), json!("markov"));
    value
}

/// A parsed policy file.
#[derive(Clone, Debug, PartialEq)]
pub enum PolicyFile {
    /// One bit per atom name.
    Tree(BTreeMap<String, bool>),
    /// Stop regions per time `t`.
    ByTime(BTreeMap<usize, Vec<String>>),
    Periodic {
        period: usize,
        regions: BTreeMap<usize, Vec<String>>,
    },
}

#[derive(Deserialize)]
struct PolicyJson {
    #[serde(default)]
    decisions: Option<BTreeMap<String, u8>>,
    #[serde(default)]
    period: Option<usize>,
    #[serde(default)]
    regions: Option<BTreeMap<String, Vec<String>>>,
}

pub fn parse_policy(text: &str) -> Result<PolicyFile, FormatError> {
    let p: PolicyJson = serde_json::from_str(text)?;
    if let Some(decisions) = p.decisions {
        let mut out = BTreeMap::new();
        for (k, v) in decisions {
            match v {
                0 | 1 => out.insert(k, v == 1),
                _ => {
                    return Err(FormatError::Policy(format!(
                        "decision for {k:?} must be 0 or 1"
                    )))
                }
            };
        }
        return Ok(PolicyFile::Tree(out));
    }
    let Some(regions) = p.regions else {
        return Err(FormatError::Policy(
            "policy needs \"decisions\" or \"regions\"".into(),
        ));
    };
    let mut by_key = BTreeMap::new();
    for (k, v) in regions {
        let key: usize = k
            .parse()
            .map_err(|_| FormatError::Policy(format!("region key {k:?} is not an integer")))?;
        by_key.insert(key, v);
    }
    match p.period {
        Some(0) => Err(FormatError::Policy("period must be at least 1".into())),
        Some(period) => {
            if let Some(bad) = by_key.keys().find(|&&k| k >= period) {
                return Err(FormatError::Policy(format!(
                    "phase {bad} is not below the period"
                )));
            }
            Ok(PolicyFile::Periodic {
                period,
                regions: by_key,
            })
        }
        None => Ok(PolicyFile::ByTime(by_key)),
    }
}

fn region_vec<S: Scalar>(
    model: &MarkovModel<S>,
    labels: &[String],
) -> Result<Vec<bool>, SolveError> {
    let mut out = vec![false; model.n_states()];
    for l in labels {
        let x = model
            .state_index(l)
            .ok_or_else(|| ModelError::UnknownState(l.clone()))?;
        out[x] = true;
    }
    Ok(out)
}

impl PolicyFile {
    /// Periodic policy for a Markov model; a per-time file is read as
    /// periodic with period equal to its number of entries.
    pub fn to_periodic<S: Scalar>(
        &self,
        model: &MarkovModel<S>,
    ) -> Result<PeriodicMarkovPolicy, SolveError> {
        let (period, regions) = match self {
            PolicyFile::Periodic { period, regions } => (*period, regions),
            PolicyFile::ByTime(regions) => (regions.len(), regions),
            PolicyFile::Tree(_) => {
                return Err(SolveError::Invalid(
                    "atom decisions given for a Markov policy".into(),
                ))
            }
        };
        let mut out = Vec::with_capacity(period);
        for phi in 0..period {
            let labels = regions
                .get(&phi)
                .ok_or_else(|| SolveError::Invalid(format!("missing region for phase {phi}")))?;
            out.push(region_vec(model, labels)?);
        }
        Ok(PeriodicMarkovPolicy::new(out))
    }

    /// Policy on a tree. Region files need a tree unrolled from `model`;
    /// out-of-domain atoms always stop.
    pub fn to_tree_policy<S: Scalar>(
        &self,
        tree: &AtomTree<S>,
        model: Option<&MarkovModel<S>>,
    ) -> Result<StoppingPolicy, SolveError> {
        match self {
            PolicyFile::Tree(bits) => {
                let mut decisions = Vec::with_capacity(tree.len());
                for atom in tree.atoms() {
                    let bit = bits
                        .get(&atom.name)
                        .copied()
                        .or(if atom.in_domain { None } else { Some(true) })
                        .ok_or_else(|| {
                            SolveError::Invalid(format!("no decision for atom {:?}", atom.name))
                        })?;
                    decisions.push(bit);
                }
                if let Some(unknown) = bits.keys().find(|k| tree.find(k).is_none()) {
                    return Err(SolveError::Invalid(format!("unknown atom {unknown:?}")));
                }
                Ok(StoppingPolicy::new(decisions))
            }
            PolicyFile::ByTime(regions) => {
                let model = model.ok_or_else(|| {
                    SolveError::Invalid("region policies need a Markov model".into())
                })?;
                let mut by_t = BTreeMap::new();
                for (&t, labels) in regions {
                    by_t.insert(t, region_vec(model, labels)?);
                }
                let mut decisions = Vec::with_capacity(tree.len());
                for atom in tree.atoms() {
                    let bit = match atom.state {
                        Some(x) if atom.in_domain => match by_t.get(&atom.level) {
                            Some(region) => region[x],
                            None if atom.level == tree.horizon() => true,
                            None => {
                                return Err(SolveError::Invalid(format!(
                                    "missing region for t = {}",
                                    atom.level
                                )))
                            }
                        },
                        _ => true,
                    };
                    decisions.push(bit);
                }
                Ok(StoppingPolicy::new(decisions))
            }
            PolicyFile::Periodic { .. } => {
                let model = model.ok_or_else(|| {
                    SolveError::Invalid("region policies need a Markov model".into())
                })?;
                let periodic = self.to_periodic(model)?;
                Ok(StoppingPolicy::from_fn(tree, |atom| match atom.state {
                    Some(x) if atom.in_domain => periodic.stops(atom.level, x),
                    _ => true,
                }))
            }
        }
    }
}

pub fn tree_policy_to_json<S: Scalar>(tree: &AtomTree<S>, policy: &StoppingPolicy) -> Value {
    let decisions: serde_json::Map<String, Value> = tree
        .atoms()
        .iter()
        .map(|a| (a.name.clone(), json!(u8::from(policy.stops(a.id)))))
        .collect();
    json!({ "decisions": decisions })
}

pub fn periodic_policy_to_json<S: Scalar>(
    model: &MarkovModel<S>,
    policy: &PeriodicMarkovPolicy,
) -> Value {
    let regions: serde_json::Map<String, Value> = (0..policy.period())
        .map(|phi| {
            let states: Vec<&str> = (0..model.n_states())
                .filter(|&x| policy.stops(phi, x))
                .map(|x| model.states()[x].as_str())
                .collect();
            (phi.to_string(), json!(states))
        })
        .collect();
    json!({ "period": policy.period(), "regions": regions })
}

pub fn pair_to_json<S: Scalar>(tree: &AtomTree<S>, pair: &SnellPair<S>) -> Value {
    let mut v = serde_json::Map::new();
    let mut s = serde_json::Map::new();
    for atom in tree.atoms() {
        v.insert(
            atom.name.clone(),
            pair.v[atom.id]
                .as_ref()
                .map_or(Value::Null, |x| json!(x.to_canonical_string())),
        );
        s.insert(
            atom.name.clone(),
            json!(pair.s[atom.id].to_canonical_string()),
        );
    }
    json!({ "V": v, "S": s })
}

#[derive(Deserialize)]
struct PairJson {
    #[serde(rename = "V")]
    v: BTreeMap<String, Option<String>>,
    #[serde(rename = "S")]
    s: BTreeMap<String, String>,
}

pub fn parse_pair<S: Scalar>(text: &str, tree: &AtomTree<S>) -> Result<SnellPair<S>, FormatError> {
    let p: PairJson = serde_json::from_str(text)?;
    let missing = |name: &str| FormatError::Policy(format!("pair has no entry for atom {name:?}"));
    let mut v = Vec::with_capacity(tree.len());
    let mut s = Vec::with_capacity(tree.len());
    for atom in tree.atoms() {
        let vi = p.v.get(&atom.name).ok_or_else(|| missing(&atom.name))?;
        v.push(
            vi.as_deref()
                .map(S::parse)
                .transpose()
                .map_err(ModelError::from)?,
        );
        let si = p.s.get(&atom.name).ok_or_else(|| missing(&atom.name))?;
        s.push(S::parse(si).map_err(ModelError::from)?);
    }
    Ok(SnellPair { v, s })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::{binomial_tree, minnie_donald_default, two_state_default};

    #[test]
    fn tree_round_trip() {
        let tree = binomial_tree();
        let text = tree_to_json(&tree).to_string();
        let Model::Tree(back) = parse_model(&text).unwrap() else {
            panic!("expected a tree")
        };
        assert_eq!(tree_to_json(&back), tree_to_json(&tree));
    }

    #[test]
    fn markov_round_trip() {
        for model in [two_state_default(), minnie_donald_default(1)] {
            let text = markov_to_json(&model).to_string();
            let Model::Markov(back) = parse_model(&text).unwrap() else {
                panic!("expected a chain")
            };
            assert_eq!(markov_to_json(&back), markov_to_json(&model));
        }
    }

    #[test]
    fn policies_parse() {
        let p = parse_policy(r#"{"period":2,"regions":{"0":["1"],"1":[]}}"#).unwrap();
        let model = two_state_default();
        let periodic = p.to_periodic(&model).unwrap();
        assert_eq!(
            periodic.regions(),
            &[vec![false, true, false], vec![false; 3]]
        );
        assert!(parse_policy(r#"{"period":1,"regions":{"3":[]}}"#).is_err());
        assert!(parse_policy(r#"{"decisions":{"a":2}}"#).is_err());
    }

    #[test]
    fn pair_round_trip() {
        let tree = binomial_tree();
        let sol = crate::recursion::backward_solve(&tree);
        let text = pair_to_json(&tree, &sol.pair).to_string();
        assert_eq!(parse_pair::<Exact>(&text, &tree).unwrap(), sol.pair);
    }

    #[test]
    fn bad_numbers_are_model_errors() {
        let text = r#"{"type":"tree","horizon":1,"nodes":[{"id":"r","payoff":"1/0"}]}"#;
        assert!(matches!(
            parse_model(text),
            Err(FormatError::Model(ModelError::Parse(_)))
        ));
    }
}
