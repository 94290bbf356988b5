use std::path::Path;

use condstop::infinite::{
    enumerate_periodic_equilibria, evaluate, periodic_deviations, phi_markov, reachable,
    truncation_limit, PeriodicFilter, PeriodicMarkovPolicy, PolicyEvaluation,
};
use condstop::io::{
    pair_to_json, parse_pair, parse_policy, periodic_policy_to_json, tree_policy_to_json,
    PolicyFile,
};
use condstop::policy::{
    continuation_value, enumerate_equilibria, is_equilibrium, phi as phi_tree, precommitted,
    EquilibriumFilter, DEFAULT_ENUMERATION_GUARD, DEFAULT_PRECOMMIT_GUARD,
};
use condstop::recursion::{
    pair_from_policy, policy_from_pair, survival_identities, verify_snell_pair,
};
use condstop::{
    backward_solve, AtomTree, MarkovModel, Scalar, SolveError, StoppingPolicy, StoppingPreference,
};
use serde_json::{json, Value};

use crate::load::{size_guard, Context};
use crate::report::{num, opt_num, show, show_opt, table, CheckOut, CliError, Report};
use crate::Preference;

fn read_file(path: &Path, what: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {what} file {path:?}: {e}")))
}

fn state_label<S: Scalar>(tree: &AtomTree<S>, id: usize, model: Option<&MarkovModel<S>>) -> String {
    match (tree.atom(id).state, model) {
        (Some(x), Some(m)) if tree.atom(id).in_domain => m.states()[x].clone(),
        _ => "-".to_string(),
    }
}

/// Time-0 value of a policy: the payoff where the root stops, the
/// continuation value otherwise.
fn root_value<S: Scalar>(tree: &AtomTree<S>, policy: &StoppingPolicy) -> Result<S, CliError> {
    if policy.stops(0) {
        Ok(tree.root().payoff.clone().expect("root is in the domain"))
    } else {
        Ok(continuation_value(tree, policy, 0)?)
    }
}

fn stop_names<S: Scalar>(tree: &AtomTree<S>, policy: &StoppingPolicy) -> Vec<String> {
    tree.atoms()
        .iter()
        .filter(|a| a.in_domain && policy.stops(a.id))
        .map(|a| a.name.clone())
        .collect()
}

pub fn solve<S: Scalar>(ctx: &Context<S>) -> Result<Report, CliError> {
    let tree = ctx.tree()?;
    let model = ctx.markov.as_ref();
    let sol = backward_solve(tree);
    let check = is_equilibrium(tree, &sol.policy)?;

    let mut atoms = Vec::new();
    let mut rows = Vec::new();
    for atom in tree.atoms() {
        let id = atom.id;
        atoms.push(json!({
            "atom": atom.name,
            "t": atom.level,
            "state": state_label(tree, id, model),
            "in_domain": atom.in_domain,
            "G": opt_num(&atom.payoff),
            "V": opt_num(&sol.pair.v[id]),
            "S": num(&sol.pair.s[id]),
            "theta": u8::from(sol.policy.stops(id)),
        }));
        rows.push(vec![
            atom.name.clone(),
            atom.level.to_string(),
            show_opt(&atom.payoff),
            show_opt(&sol.pair.v[id]),
            show(&sol.pair.s[id]),
            u8::from(sol.policy.stops(id)).to_string(),
        ]);
    }

    let mut text = vec![
        format!("V_0 = {}", show_opt(&sol.pair.v[0])),
        format!("S_0 = {}", show(&sol.pair.s[0])),
        format!("theta_0 = {}", u8::from(sol.policy.stops(0))),
    ];
    let mut results = json!({
        "V0": opt_num(&sol.pair.v[0]),
        "S0": num(&sol.pair.s[0]),
        "theta0": u8::from(sol.policy.stops(0)),
        "is_equilibrium": check.holds(),
        "atoms": atoms,
        "pair": pair_to_json(tree, &sol.pair),
        "policy": tree_policy_to_json(tree, &sol.policy),
    });
    if let Some(m) = model {
        // One row per level and domain state; the equilibrium is Markovian.
        let mut by_state = Vec::new();
        let mut state_rows = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for atom in tree.atoms().iter().filter(|a| a.in_domain) {
            let x = atom.state.expect("unrolled atoms carry states");
            if !seen.insert((atom.level, x)) {
                continue;
            }
            by_state.push(json!({
                "t": atom.level,
                "state": m.states()[x],
                "theta": u8::from(sol.policy.stops(atom.id)),
                "V": opt_num(&sol.pair.v[atom.id]),
                "S": num(&sol.pair.s[atom.id]),
            }));
            state_rows.push(vec![
                atom.level.to_string(),
                m.states()[x].clone(),
                u8::from(sol.policy.stops(atom.id)).to_string(),
                show_opt(&sol.pair.v[atom.id]),
                show(&sol.pair.s[atom.id]),
            ]);
        }
        results["by_state"] = json!(by_state);
        text.push("policy by (t, state); values carry the discount:".into());
        text.extend(table(&["t", "state", "theta", "V", "S"], &state_rows));
    } else {
        text.push("atoms:".into());
        text.extend(table(&["atom", "t", "G", "V", "S", "theta"], &rows));
    }
    let verification = vec![CheckOut::new(
        "is_equilibrium",
        check.holds(),
        check
            .deviating
            .iter()
            .chain(check.violations.iter().map(|v| &v.atom))
            .map(|&a| tree.name(a).into())
            .collect(),
    )];
    Ok(Report::new(
        Some(ctx.info.clone()),
        results,
        verification,
        text,
    ))
}

pub fn precommit<S: Scalar>(ctx: &Context<S>) -> Result<Report, CliError> {
    let tree = ctx.tree()?;
    let pre = precommitted(tree, size_guard(DEFAULT_PRECOMMIT_GUARD)?)?;
    let sol = backward_solve(tree);
    let eq = root_value(tree, &sol.policy)?;
    let leaves = tree.level(tree.horizon());
    let levels: serde_json::Map<String, Value> = leaves
        .iter()
        .zip(&pre.levels)
        .map(|(&l, &t)| (tree.name(l).to_string(), json!(t)))
        .collect();
    let stop_atoms: Vec<&str> = pre.stop_atoms.iter().map(|&a| tree.name(a)).collect();
    let mut text = vec![
        format!("precommitted value = {}", show(&pre.value)),
        format!("P(tau before exit) = {}", show(&pre.survival)),
        format!(
            "stops at: {}",
            if stop_atoms.is_empty() {
                "-".to_string()
            } else {
                stop_atoms.join(", ")
            }
        ),
        "tau per path (by level-T atom):".into(),
    ];
    let rows: Vec<Vec<String>> = leaves
        .iter()
        .zip(&pre.levels)
        .map(|(&l, t)| vec![tree.name(l).into(), t.to_string()])
        .collect();
    text.extend(table(&["path", "tau"], &rows));
    text.push(format!("equilibrium time-0 value = {}", show(&eq)));
    let results = json!({
        "value": num(&pre.value),
        "payoff_mass": num(&pre.payoff_mass),
        "survival": num(&pre.survival),
        "stop_atoms": stop_atoms,
        "tau": levels,
        "equilibrium_value": num(&eq),
    });
    let dominates = pre.value.compare(&eq) != std::cmp::Ordering::Less;
    let verification = vec![CheckOut::new(
        "dominates_equilibrium",
        dominates,
        Vec::new(),
    )];
    Ok(Report::new(
        Some(ctx.info.clone()),
        results,
        verification,
        text,
    ))
}

fn periodic_policy<S: Scalar>(
    model: &MarkovModel<S>,
    file: &PolicyFile,
    period: Option<usize>,
) -> Result<PeriodicMarkovPolicy, CliError> {
    let policy = file.to_periodic(model)?;
    if policy.regions().iter().any(|r| r.len() != model.n_states()) {
        return Err(CliError::usage("policy regions do not match the model"));
    }
    match period {
        Some(0) => Err(CliError::usage("--period must be at least 1")),
        Some(p) if p % policy.period() != 0 => Err(CliError::usage(format!(
            "--period {p} is not a multiple of the policy period {}",
            policy.period()
        ))),
        Some(p) => Ok(policy.with_period(p)),
        None => Ok(policy),
    }
}

fn regions_text<S: Scalar>(model: &MarkovModel<S>, policy: &PeriodicMarkovPolicy) -> Vec<String> {
    (0..policy.period())
        .map(|phi| {
            let states: Vec<&str> = (0..model.n_states())
                .filter(|&x| policy.stops(phi, x))
                .map(|x| model.states()[x].as_str())
                .collect();
            format!("  phase {phi}: stop at {{{}}}", states.join(", "))
        })
        .collect()
}

pub fn phi<S: Scalar>(
    ctx: &Context<S>,
    policy_path: &Path,
    period: Option<usize>,
    iterate: usize,
) -> Result<Report, CliError> {
    let file = parse_policy(&read_file(policy_path, "policy")?)?;
    let mut text = Vec::new();
    let mut rounds = Vec::new();
    if ctx.periodic(period) {
        let model = ctx.markov()?;
        let mut current = periodic_policy(model, &file, period)?.normalized(model);
        let seen = reachable(model, current.period());
        text.push("start:".into());
        text.extend(regions_text(model, &current));
        for round in 1..=iterate {
            let next = phi_markov(model, &current)?;
            let changed: Vec<Value> = (0..current.period())
                .flat_map(|phi| (0..model.n_states()).map(move |x| (phi, x)))
                .filter(|&(phi, x)| current.stops(phi, x) != next.stops(phi, x))
                .map(|(phi, x)| json!({ "phase": phi, "state": model.states()[x], "reachable": seen[phi][x] }))
                .collect();
            text.push(format!("round {round}: {} changed pairs", changed.len()));
            text.extend(regions_text(model, &next));
            rounds.push(
                json!({ "policy": periodic_policy_to_json(model, &next), "changed": changed }),
            );
            current = next;
        }
    } else {
        let tree = ctx.tree()?;
        let mut current = file
            .to_tree_policy(tree, ctx.markov.as_ref())?
            .normalized(tree);
        for round in 1..=iterate {
            let next = phi_tree(tree, &current)?;
            let changed: Vec<&str> = (0..tree.len())
                .filter(|&a| current.stops(a) != next.stops(a))
                .map(|a| tree.name(a))
                .collect();
            text.push(format!(
                "round {round}: changed at {}",
                if changed.is_empty() {
                    "-".to_string()
                } else {
                    changed.join(", ")
                }
            ));
            text.push(format!(
                "  stops at: {}",
                stop_names(tree, &next).join(", ")
            ));
            rounds.push(json!({ "policy": tree_policy_to_json(tree, &next), "changed": changed }));
            current = next;
        }
    }
    let results = json!({ "rounds": rounds });
    Ok(Report::new(
        Some(ctx.info.clone()),
        results,
        Vec::new(),
        text,
    ))
}

fn evaluation_json<S: Scalar>(model: &MarkovModel<S>, eval: &PolicyEvaluation<S>) -> Value {
    let mut rows = Vec::new();
    for phi in 0..eval.period {
        for x in (0..model.n_states()).filter(|&x| model.in_domain(x)) {
            rows.push(json!({
                "phase": phi,
                "state": model.states()[x],
                "reachable": eval.reachable[phi][x],
                "h": opt_num(&eval.h[phi][x]),
                "p": num(&eval.p[phi][x]),
                "J": opt_num(&eval.j[phi][x]),
            }));
        }
    }
    json!(rows)
}

fn evaluation_text<S: Scalar>(model: &MarkovModel<S>, eval: &PolicyEvaluation<S>) -> Vec<String> {
    let mut rows = Vec::new();
    for phi in 0..eval.period {
        for x in (0..model.n_states()).filter(|&x| model.in_domain(x) && eval.reachable[phi][x]) {
            rows.push(vec![
                phi.to_string(),
                model.states()[x].clone(),
                show_opt(&eval.h[phi][x]),
                show(&eval.p[phi][x]),
                show_opt(&eval.j[phi][x]),
            ]);
        }
    }
    table(&["phase", "state", "h", "p", "J"], &rows)
}

pub fn enumerate<S: Scalar>(
    ctx: &Context<S>,
    period: Option<usize>,
    preference: Preference,
) -> Result<Report, CliError> {
    let guard = size_guard(DEFAULT_ENUMERATION_GUARD)?;
    let mut text = Vec::new();
    let results;
    if ctx.periodic(period) {
        let model = ctx.markov()?;
        let period = period.unwrap_or(1);
        let filter = match preference {
            Preference::All => PeriodicFilter::All,
            Preference::Early => PeriodicFilter::Early,
            Preference::Late => PeriodicFilter::Late,
        };
        let found = enumerate_periodic_equilibria(model, period, filter, guard)?;
        text.push(format!("period-{period} equilibria: {}", found.len()));
        let mut list = Vec::new();
        for (i, e) in found.iter().enumerate() {
            text.push(format!("equilibrium {}:", i + 1));
            text.extend(regions_text(model, &e.policy));
            text.extend(evaluation_text(model, &e.evaluation));
            list.push(json!({
                "policy": periodic_policy_to_json(model, &e.policy),
                "evaluation": evaluation_json(model, &e.evaluation),
            }));
        }
        results = json!({ "period": period, "count": found.len(), "equilibria": list });
    } else {
        let tree = ctx.tree()?;
        let filter = match preference {
            Preference::All => EquilibriumFilter::All,
            Preference::Early => EquilibriumFilter::Preference(StoppingPreference::early(tree)),
            Preference::Late => EquilibriumFilter::Preference(StoppingPreference::late(tree)),
        };
        let found = enumerate_equilibria(tree, &filter, guard)?;
        text.push(format!("equilibria: {}", found.len()));
        let mut list = Vec::new();
        for (i, policy) in found.iter().enumerate() {
            let value = root_value(tree, policy)?;
            text.push(format!(
                "equilibrium {}: time-0 value {}",
                i + 1,
                show(&value)
            ));
            text.push(format!(
                "  stops at: {}",
                stop_names(tree, policy).join(", ")
            ));
            list.push(json!({ "policy": tree_policy_to_json(tree, policy), "value": num(&value) }));
        }
        results = json!({ "count": found.len(), "equilibria": list });
    }
    Ok(Report::new(
        Some(ctx.info.clone()),
        results,
        Vec::new(),
        text,
    ))
}

fn tree_checks<S: Scalar>(
    tree: &AtomTree<S>,
    policy: &StoppingPolicy,
    prefix: &str,
) -> Result<(Vec<CheckOut>, Value), CliError> {
    let check = is_equilibrium(tree, policy)?;
    let mut out = vec![
        CheckOut::new(
            format!("{prefix}admissible"),
            check.violations.is_empty(),
            check
                .violations
                .iter()
                .map(|v| tree.name(v.atom).to_string())
                .collect(),
        ),
        CheckOut::new(
            format!("{prefix}equilibrium"),
            check.deviating.is_empty(),
            check
                .deviating
                .iter()
                .map(|&a| tree.name(a).into())
                .collect(),
        ),
    ];
    let mut extra = json!({});
    if check.holds() {
        match pair_from_policy(tree, policy) {
            Ok(pair) => {
                let report = verify_snell_pair(tree, &pair)?;
                out.extend(
                    report
                        .checks
                        .iter()
                        .map(|c| CheckOut::from_check(tree, &format!("{prefix}snell."), c)),
                );
                let ids = survival_identities(tree, policy, &pair)?;
                out.extend(
                    ids.checks
                        .iter()
                        .map(|c| CheckOut::from_check(tree, &format!("{prefix}survival."), c)),
                );
                extra = json!({ "early_preference": true, "pair": pair_to_json(tree, &pair) });
            }
            Err(SolveError::NotEarlyEquilibrium(_)) => extra = json!({ "early_preference": false }),
            Err(e) => return Err(e.into()),
        }
    }
    Ok((out, extra))
}

pub fn verify<S: Scalar>(
    ctx: &Context<S>,
    pair_path: Option<&Path>,
    policy_path: Option<&Path>,
    period: Option<usize>,
) -> Result<Report, CliError> {
    let mut text = Vec::new();
    let (verification, results) = match (pair_path, policy_path) {
        (Some(path), _) => {
            let tree = ctx.tree()?;
            let pair = parse_pair::<S>(&read_file(path, "pair")?, tree)?;
            let report = verify_snell_pair(tree, &pair)?;
            let mut checks: Vec<CheckOut> = report
                .checks
                .iter()
                .map(|c| CheckOut::from_check(tree, "snell.", c))
                .collect();
            let mut results = json!({ "kind": "pair" });
            if report.holds() {
                let policy = policy_from_pair(tree, &pair)?;
                let (more, _) = tree_checks(tree, &policy, "policy.")?;
                checks.extend(more);
                text.push(format!(
                    "policy stops at: {}",
                    stop_names(tree, &policy).join(", ")
                ));
                results["policy"] = tree_policy_to_json(tree, &policy);
            }
            (checks, results)
        }
        (None, Some(path)) => {
            let file = parse_policy(&read_file(path, "policy")?)?;
            if ctx.periodic(period) {
                let model = ctx.markov()?;
                let policy = periodic_policy(model, &file, period)?;
                let eval = evaluate(model, &policy)?;
                let dev = periodic_deviations(model, &policy)?;
                text.extend(evaluation_text(model, &eval));
                let at = dev
                    .iter()
                    .map(|&(phi, x)| format!("phase {phi} state {}", model.states()[x]))
                    .collect();
                (
                    vec![CheckOut::new("equilibrium", dev.is_empty(), at)],
                    json!({ "kind": "periodic policy", "evaluation": evaluation_json(model, &eval) }),
                )
            } else {
                let tree = ctx.tree()?;
                let policy = file.to_tree_policy(tree, ctx.markov.as_ref())?;
                let (checks, extra) = tree_checks(tree, &policy, "")?;
                let mut results = json!({ "kind": "policy" });
                if let Some(early) = extra.get("early_preference") {
                    results["early_preference"] = early.clone();
                    if early == &json!(false) {
                        text.push("equilibrium without early stopping preference; Snell pair checks skipped".into());
                    }
                }
                (checks, results)
            }
        }
        (None, None) => return Err(CliError::usage("verify needs --pair or --policy")),
    };
    Ok(Report::new(
        Some(ctx.info.clone()),
        results,
        verification,
        text,
    ))
}

pub fn truncate<S: Scalar>(
    ctx: &Context<S>,
    max_horizon: usize,
    window: usize,
) -> Result<Report, CliError> {
    if window == 0 {
        return Err(CliError::usage("--window must be positive"));
    }
    let model = ctx.markov()?;
    let report = truncation_limit(model, max_horizon, window)?;
    let mut text = vec![
        format!(
            "horizons {max_horizon} down to {} in steps of {}",
            max_horizon.saturating_sub((window - 1) * report.stride),
            report.stride
        ),
        format!("decisions reported for t < {}", report.depth),
        format!("stable: {}", report.stable()),
    ];
    let mut rows = Vec::new();
    for (t, row) in report.decisions.iter().enumerate() {
        let cells: Vec<String> = (0..model.n_states())
            .filter(|&x| row[x].is_some())
            .map(|x| format!("{}:{}", model.states()[x], u8::from(row[x].unwrap())))
            .collect();
        rows.push(vec![t.to_string(), cells.join(" ")]);
    }
    text.extend(table(&["t", "state:theta"], &rows));
    let unstable: Vec<Value> = report
        .unstable
        .iter()
        .map(|&(t, x)| json!({ "t": t, "state": model.states()[x] }))
        .collect();
    let mut results = json!({
        "max_horizon": max_horizon,
        "window": window,
        "stride": report.stride,
        "depth": report.depth,
        "stable": report.stable(),
        "unstable": unstable,
        "decisions": report.decisions.iter().map(|row| {
            row.iter().enumerate().filter_map(|(x, b)| b.map(|b| (model.states()[x].clone(), json!(u8::from(b))))).collect::<serde_json::Map<_, _>>()
        }).collect::<Vec<_>>(),
        "candidate": Value::Null,
        "verified": report.verified,
    });
    let mut verification = Vec::new();
    if let Some(c) = &report.candidate {
        text.push(format!("periodic candidate with period {}:", c.period()));
        text.extend(regions_text(model, c));
        results["candidate"] = periodic_policy_to_json(model, c);
    } else if report.stable() {
        text.push("no periodic candidate fits the stabilized decisions".into());
    }
    if let Some(v) = report.verified {
        verification.push(CheckOut::new("candidate_is_equilibrium", v, Vec::new()));
    }
    if let Some(e) = &report.verification_error {
        text.push(format!("candidate could not be evaluated: {e}"));
        results["verification_error"] = json!(e.to_string());
    }
    Ok(Report::new(
        Some(ctx.info.clone()),
        results,
        verification,
        text,
    ))
}
