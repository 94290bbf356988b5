//! The `example` command: every reported number of a built-in model,
//! recomputed and checked.

use std::cmp::Ordering;

use condstop::examples::{convert_model, convert_tree, minnie_donald_regions, minnie_donald_theta};
use condstop::infinite::{
    agree_on_reachable, check_growth, check_minnie_donald_conditions,
    enumerate_periodic_equilibria, evaluate, periodic_deviations, phi_markov, truncation_limit,
    PeriodicFilter, PeriodicMarkovPolicy,
};
use condstop::io::{periodic_policy_to_json, Model};
use condstop::policy::{
    continuation_value, enumerate_equilibria, is_equilibrium, precommitted, EquilibriumFilter,
    DEFAULT_ENUMERATION_GUARD, DEFAULT_PRECOMMIT_GUARD,
};
use condstop::recursion::{survival_identities, verify_snell_pair};
use condstop::{backward_solve, unroll, AtomTree, MarkovModel, Scalar, StoppingPolicy};
use serde_json::{json, Map, Value};

use crate::load::{builtin_with, info, size_guard};
use crate::report::{num, show, CheckOut, CliError, Report};
use crate::Params;

struct Battery {
    text: Vec<String>,
    results: Map<String, Value>,
    checks: Vec<CheckOut>,
}

impl Battery {
    fn new() -> Self {
        Battery {
            text: Vec::new(),
            results: Map::new(),
            checks: Vec::new(),
        }
    }

    fn line(&mut self, s: impl Into<String>) {
        self.text.push(s.into());
    }

    fn check(&mut self, name: &str, holds: bool) {
        self.checks.push(CheckOut::new(name, holds, Vec::new()));
    }

    fn put(&mut self, key: &str, value: Value) {
        self.results.insert(key.to_string(), value);
    }
}

fn r<S: Scalar>(n: i64, d: i64) -> S {
    S::from_int(n) / S::from_int(d)
}

pub fn example<S: Scalar>(name: &str, params: &Params) -> Result<Report, CliError> {
    let model = builtin_with(name, params)?;
    let mut b = Battery::new();
    match (&model, name) {
        (Model::Tree(tree), _) => binomial::<S>(&mut b, &convert_tree(tree))?,
        (Model::Markov(m), "two-state") => two_state::<S>(&mut b, &convert_model(m))?,
        (Model::Markov(m), _) => minnie_donald::<S>(&mut b, &convert_model(m))?,
    }
    Ok(Report::new(
        Some(info(&format!("builtin:{name}"), &model)),
        Value::Object(b.results),
        b.checks,
        b.text,
    ))
}

fn binomial<S: Scalar>(b: &mut Battery, tree: &AtomTree<S>) -> Result<(), CliError> {
    let id = |name: &str| tree.find(name).expect("built-in atom");
    let sol = backward_solve(tree);
    let v0 = sol.pair.v[0].clone().expect("root value");
    let ju = continuation_value(tree, &StoppingPolicy::stop_everywhere(tree), id("u"))?;
    let jd = continuation_value(tree, &StoppingPolicy::stop_everywhere(tree), id("d"))?;
    b.line("equilibrium with early stopping preference:");
    b.line(format!(
        "  time-1 continuation values: J(u) = {}, J(d) = {}",
        show(&ju),
        show(&jd)
    ));
    b.line(format!(
        "  V_0 = {}, theta_0 = {}",
        show(&v0),
        u8::from(sol.policy.stops(0))
    ));
    b.check(
        "J(u) = 3 < 10 and J(d) = 2 < 3",
        ju.same(&r(3, 1)) && jd.same(&r(2, 1)),
    );
    b.check("V_0 = 13/2", v0.same(&r(13, 2)));
    b.check(
        "theta_0 = 0, theta_1 = theta_2 = 1",
        sol.policy.decisions().iter().skip(1).all(|&s| s) && !sol.policy.stops(0),
    );
    b.check("is_equilibrium", is_equilibrium(tree, &sol.policy)?.holds());

    let pre = precommitted(tree, size_guard(DEFAULT_PRECOMMIT_GUARD)?)?;
    let taus: Vec<(String, usize)> = ["uu", "ud", "du", "dd"]
        .iter()
        .map(|n| (n.to_string(), pre.level_at(tree, id(n)).expect("leaf")))
        .collect();
    b.line("precommitted stopping time:");
    b.line(format!("  V_pre = {}", show(&pre.value)));
    b.line(format!(
        "  tau: {}",
        taus.iter()
            .map(|(n, t)| format!("{n} -> {t}"))
            .collect::<Vec<_>>()
            .join(", ")
    ));
    b.check("V_pre = 22/3", pre.value.same(&r(22, 3)));
    b.check(
        "tau_pre = 1 after up, 2 after down",
        taus.iter().map(|(_, t)| *t).collect::<Vec<_>>() == vec![1, 1, 2, 2],
    );
    b.check("V_pre > V_0", pre.value.compare(&v0) == Ordering::Greater);
    let d_overturns = sol.policy.stops(id("d")) && pre.level_at(tree, id("du")) == Some(2);
    b.check("the agent at d overturns tau_pre", d_overturns);

    let all = enumerate_equilibria(
        tree,
        &EquilibriumFilter::All,
        size_guard(DEFAULT_ENUMERATION_GUARD)?,
    )?;
    b.line(format!("equilibria: {}", all.len()));
    b.check(
        "exactly one equilibrium",
        all.len() == 1 && all[0] == sol.policy,
    );

    let report = verify_snell_pair(tree, &sol.pair)?;
    for c in &report.checks {
        b.checks.push(CheckOut::from_check(tree, "snell.", c));
    }
    let ids = survival_identities(tree, &sol.policy, &sol.pair)?;
    for c in &ids.checks {
        b.checks.push(CheckOut::from_check(tree, "survival.", c));
    }

    b.put("V0", num(&v0));
    b.put("J_u", num(&ju));
    b.put("J_d", num(&jd));
    b.put("theta0", json!(u8::from(sol.policy.stops(0))));
    b.put("precommitted", num(&pre.value));
    b.put(
        "tau_pre",
        Value::Object(taus.into_iter().map(|(n, t)| (n, json!(t))).collect()),
    );
    b.put("equilibria", json!(all.len()));
    Ok(())
}

fn stop_sets<S: Scalar>(model: &MarkovModel<S>, sets: &[usize]) -> PeriodicMarkovPolicy {
    PeriodicMarkovPolicy::from_sets(model.n_states(), &[sets.to_vec()])
}

fn two_state<S: Scalar>(b: &mut Battery, model: &MarkovModel<S>) -> Result<(), CliError> {
    let delta = model.discount().clone();
    let a = model.g(2).expect("state 2 payoff").clone();
    let one = S::one();
    let everywhere = stop_sets(model, &[0, 1, 2]);
    let at_two = stop_sets(model, &[0, 2]);
    let e1 = evaluate(model, &everywhere)?;
    let e2 = evaluate(model, &at_two)?;
    let j1 = e1.j[0][1].clone().expect("state 1 survives");
    let j2 = e2.j[0][1].clone().expect("state 1 survives");
    let f1 = delta.clone() * (one.clone() + a.clone()) / r(2, 1);
    let f2 = r::<S>(2, 1) * a.clone() * delta.clone() / (r::<S>(3, 1) - delta.clone());
    b.line(format!("discount = {}, a = {}", show(&delta), show(&a)));
    b.line("continuation value of the agent at state 1:");
    b.line(format!(
        "  stop everywhere: J = {}   delta(1+a)/2 = {}",
        show(&j1),
        show(&f1)
    ));
    b.line(format!(
        "  stop at state 2: J = {}   2a delta/(3-delta) = {}",
        show(&j2),
        show(&f2)
    ));
    b.check("J under stop-everywhere = delta(1+a)/2", j1.same(&f1));
    b.check("J under stop-at-2 = 2a delta/(3-delta)", j2.same(&f2));
    let separated = j2.compare(&one) == Ordering::Greater
        && one.compare(&j1) == Ordering::Greater
        && a.compare(&one) == Ordering::Greater;
    b.line(format!(
        "  2a delta/(3-delta) > g(1) = 1 > delta(1+a)/2 and a > 1: {}",
        if separated { "yes" } else { "no" }
    ));

    let found = enumerate_periodic_equilibria(model, 1, PeriodicFilter::All, size_guard(1 << 20)?)?;
    b.line(format!("time-homogeneous equilibria: {}", found.len()));
    for e in &found {
        let states: Vec<&str> = (0..model.n_states())
            .filter(|&x| e.policy.stops(0, x))
            .map(|x| model.states()[x].as_str())
            .collect();
        b.line(format!(
            "  stop at {{{}}}: J(1) = {}",
            states.join(", "),
            show(e.evaluation.j[0][1].as_ref().unwrap())
        ));
    }
    if separated {
        let both = found.len() == 2
            && found
                .iter()
                .any(|e| agree_on_reachable(model, &e.policy, &everywhere))
            && found
                .iter()
                .any(|e| agree_on_reachable(model, &e.policy, &at_two));
        b.check(
            "exactly the two equilibria stop-everywhere and stop-at-2",
            both,
        );
    }

    let horizon = 6;
    let tree = unroll(model, horizon)?;
    let sol = backward_solve(&tree);
    let all_stop = tree.atoms().iter().all(|at| sol.policy.stops(at.id));
    b.line(format!(
        "horizon {horizon}: backward recursion stops everywhere: {all_stop}"
    ));
    if one.compare(&j1) == Ordering::Greater {
        b.check("finite horizon equilibrium stops everywhere", all_stop);
    }

    let report = truncation_limit(model, 12, 3)?;
    let limit = report.candidate.clone();
    b.line(format!(
        "truncation limit (N = 12, K = 3): {}",
        match &limit {
            Some(c) if agree_on_reachable(model, c, &everywhere) => "stop everywhere".to_string(),
            Some(c) => format!("period {} candidate", c.period()),
            None => "no stable candidate".to_string(),
        }
    ));
    if one.compare(&j1) == Ordering::Greater {
        b.check(
            "truncation limit is stop-everywhere",
            limit
                .as_ref()
                .is_some_and(|c| agree_on_reachable(model, c, &everywhere)),
        );
    }

    let c = (one.clone() + one.clone() / delta.clone()) / r(2, 1);
    if c.compare(&one) == Ordering::Greater {
        let growth = check_growth(model, &c)?;
        b.line(format!("growth condition with c = {}: {growth}", show(&c)));
        b.check("growth condition", growth);
    }

    let fixture = non_markovian(model, &e1, &e2, 6)?;
    b.line(format!(
        "non-Markovian policy on the depth-6 tree: {} agents checked, {} best responses, non-Markovian: {}",
        fixture.0, fixture.1, fixture.2
    ));
    if separated {
        b.check(
            "non-Markovian policy: every agent before depth 6 best-responds",
            fixture.0 == fixture.1,
        );
    }

    b.put("discount", num(&delta));
    b.put("a", num(&a));
    b.put("J_stop_everywhere", num(&j1));
    b.put("J_stop_at_2", num(&j2));
    b.put("formula_stop_everywhere", num(&f1));
    b.put("formula_stop_at_2", num(&f2));
    b.put(
        "equilibria",
        json!(found
            .iter()
            .map(|e| periodic_policy_to_json(model, &e.policy))
            .collect::<Vec<_>>()),
    );
    b.put("finite_horizon_stop_everywhere", json!(all_stop));
    b.put(
        "truncation_candidate",
        limit.map_or(Value::Null, |c| periodic_policy_to_json(model, &c)),
    );
    b.put("non_markovian_checked", json!(fixture.0));
    b.put("non_markovian_best_responses", json!(fixture.1));
    Ok(())
}

/// The policy that stops at times 0 and 1 and afterwards continues exactly
/// on `{X_1 = 2, X_t = 1}`. Each agent before `depth` is compared against the
/// continuation value of the stationary policy its successors follow.
///
/// Returns (agents checked, agents best-responding, whether both decisions
/// occur at some state 1 and time).
fn non_markovian<S: Scalar>(
    model: &MarkovModel<S>,
    everywhere: &condstop::infinite::PolicyEvaluation<S>,
    at_two: &condstop::infinite::PolicyEvaluation<S>,
    depth: usize,
) -> Result<(usize, usize, bool), CliError> {
    let tree = unroll(model, depth)?;
    let first_state = |id: usize| {
        let mut a = id;
        while tree.atom(a).level > 1 {
            a = tree.atom(a).parent.expect("below the root");
        }
        tree.atom(a).state
    };
    let theta = |id: usize| {
        let atom = tree.atom(id);
        atom.level <= 1 || !(first_state(id) == Some(2) && atom.state == Some(1))
    };
    let (mut checked, mut ok) = (0, 0);
    let (mut seen_stop, mut seen_continue) = (false, false);
    for atom in tree
        .atoms()
        .iter()
        .filter(|a| a.in_domain && a.level < depth)
    {
        let x = atom.state.expect("domain atoms carry states");
        let future = if atom.level >= 1 && first_state(atom.id) == Some(2) {
            at_two
        } else {
            everywhere
        };
        let Some(j) = &future.j[0][x] else { continue };
        let g = model.g(x).expect("domain payoff");
        checked += 1;
        if (g.compare(j) != Ordering::Less) == theta(atom.id) {
            ok += 1;
        }
        if x == 1 && atom.level >= 2 {
            if theta(atom.id) {
                seen_stop = true;
            } else {
                seen_continue = true;
            }
        }
    }
    Ok((checked, ok, seen_stop && seen_continue))
}

fn minnie_donald<S: Scalar>(b: &mut Battery, model: &MarkovModel<S>) -> Result<(), CliError> {
    let delta = model.discount().clone();
    let a = model.g(1).expect("payoff").clone();
    let bb = model.g(4).expect("payoff").clone();
    b.line(format!(
        "discount = {}, a = {}, b = {}, X_0 = {}",
        show(&delta),
        show(&a),
        show(&bb),
        model.states()[model.initial()]
    ));
    b.line("parameter conditions:");
    let conditions = check_minnie_donald_conditions(&delta, &a, &bb);
    for c in &conditions {
        b.line(format!(
            "  [{}] group {}: {}",
            if c.holds { "holds" } else { "fails" },
            c.group,
            c.text
        ));
        b.check(&format!("condition: {}", c.text), c.holds);
    }
    b.put(
        "conditions",
        json!(conditions
            .iter()
            .map(|c| json!({ "group": c.group, "text": c.text, "holds": c.holds }))
            .collect::<Vec<_>>()),
    );

    let guard = size_guard(1 << 20)?;
    let mut census = Map::new();
    for period in [1, 2, 4] {
        let found = enumerate_periodic_equilibria(model, period, PeriodicFilter::All, guard)?;
        b.line(format!("period-{period} equilibria: {}", found.len()));
        for e in &found {
            let which: Vec<String> = (1..=4)
                .filter(|&i| agree_on_reachable(model, &e.policy, &minnie_donald_theta(i)))
                .map(|i| format!("theta^{i}"))
                .collect();
            b.line(format!(
                "  equal on reachable pairs to {}",
                which.join(", ")
            ));
        }
        census.insert(period.to_string(), json!(found.len()));
        match period {
            1 => b.check("no time-homogeneous equilibrium", found.is_empty()),
            4 => {
                let pair = if model.initial() == 1 { [1, 2] } else { [1, 3] };
                let matched = found.len() == 2
                    && pair.iter().all(|&i| {
                        found
                            .iter()
                            .any(|e| agree_on_reachable(model, &e.policy, &minnie_donald_theta(i)))
                    });
                b.check(
                    "exactly two period-4 equilibria, theta^1 and its shift",
                    matched,
                );
            }
            _ => {}
        }
    }
    b.put("census", Value::Object(census));

    for i in 1..=4 {
        let dev = periodic_deviations(model, &minnie_donald_theta(i))?;
        b.check(&format!("theta^{i} is an equilibrium"), dev.is_empty());
    }
    let same = if model.initial() == 1 {
        [(1, 4), (2, 3)]
    } else {
        [(1, 2), (3, 4)]
    };
    for (i, j) in same {
        b.check(
            &format!("theta^{i} = theta^{j} on reachable pairs"),
            agree_on_reachable(model, &minnie_donald_theta(i), &minnie_donald_theta(j)),
        );
    }

    let regions = minnie_donald_regions();
    b.line("best-response map applied twice to homogeneous R_n:");
    for n in 0..4 {
        let start = PeriodicMarkovPolicy::homogeneous(regions[n].clone());
        let twice = phi_markov(model, &phi_markov(model, &start)?)?;
        let target = PeriodicMarkovPolicy::homogeneous(regions[(n + 2) % 4].clone());
        let ok = agree_on_reachable(model, &twice, &target);
        b.line(format!("  R_{} -> R_{}: {ok}", n + 1, (n + 2) % 4 + 1));
        b.check(
            &format!("phi(phi(R_{})) = R_{}", n + 1, (n + 2) % 4 + 1),
            ok,
        );
    }

    let report = truncation_limit(model, 40, 3)?;
    match &report.candidate {
        Some(c) => {
            let which: Vec<String> = (1..=4)
                .filter(|&i| agree_on_reachable(model, c, &minnie_donald_theta(i)))
                .map(|i| format!("theta^{i}"))
                .collect();
            b.line(format!(
                "truncation limit (N = 40, K = 3): stride {}, period {}, equal to {}",
                report.stride,
                c.period(),
                if which.is_empty() {
                    "-".to_string()
                } else {
                    which.join(", ")
                }
            ));
            b.check(
                "truncation limit is a period-4 equilibrium",
                c.period() == 4 && report.verified == Some(true),
            );
            b.put("truncation_candidate", periodic_policy_to_json(model, c));
        }
        None => {
            b.line("truncation limit (N = 40, K = 3): no stable periodic candidate");
            b.check("truncation limit is a period-4 equilibrium", false);
        }
    }

    let c = (S::one() + S::one() / delta.clone()) / r(2, 1);
    if c.compare(&S::one()) == Ordering::Greater {
        let growth = check_growth(model, &c)?;
        b.line(format!("growth condition with c = {}: {growth}", show(&c)));
        b.check("growth condition", growth);
    }
    Ok(())
}
