//! Subcommand implementations. Each returns a JSON report, a verdict and
//! any files to write.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use serde_json::{json, Value};
use tvdisc_core::gamma::{compute_gamma_set, separation_bound};
use tvdisc_core::mdp::{optimal_policy, solve_valit, valit_argmax, ValItInstance};
use tvdisc_core::reduction::{answer_spe_start, build_gadget, Method};
use tvdisc_core::scalar::{format_rational, parse_rational};
use tvdisc_core::spe::{
    compute_eps_spe, compute_eps_spe_unknown_gap, compute_exact_spe, Branch, DynamicPolicy, SeparationSource,
};
use tvdisc_core::verifier::{check, preference_reversal_demo};
use tvdisc_core::{BigInt, BigRational, BigUint, DiscountFunction, Magnitude, Mdp, Scalar, Settings};

use crate::formats::{dynamic_policy_to_file, instance_to_file, policy_map, to_json, Instance};
use crate::report::{per_state, verification, Render};

#[derive(Debug)]
pub struct Output {
    pub report: Value,
    /// False for a failed verification or a "no" answer.
    pub verdict: bool,
    pub files: Vec<(PathBuf, String)>,
    /// Printed verbatim instead of the report.
    pub raw: Option<String>,
}

impl Output {
    fn new(report: Value, verdict: bool) -> Self {
        Output { report, verdict, files: Vec::new(), raw: None }
    }
}

pub fn rational(text: &str, what: &str) -> Result<BigRational> {
    parse_rational(text).ok_or_else(|| anyhow!("{what}: '{text}' is not a number"))
}

fn arithmetic(exact: bool) -> &'static str {
    if exact {
        "exact"
    } else {
        "float"
    }
}

fn action_index(mdp: &Mdp, name: &str) -> Result<usize> {
    mdp.action_index(mdp.start(), name)
        .ok_or_else(|| anyhow!("action '{name}' is not available at start state '{}'", mdp.state_name(mdp.start())))
}

fn require_discount(instance: &Instance) -> Result<&DiscountFunction> {
    instance.discount.as_ref().context("the instance has no \"discount\" entry and no --discount file was given")
}

pub fn solve(instance: &Instance, gamma: &BigRational, exact: bool, settings: &Settings) -> Result<Output> {
    fn run<S: Scalar + Render>(mdp: &Mdp, gamma: &BigRational, settings: &Settings) -> Result<Value> {
        let (policy, values) = optimal_policy(mdp, &S::from_exact(gamma), settings)?;
        Ok(json!({
            "policy": policy_map(mdp, &policy),
            "values": per_state(mdp, &values.values),
            "start_value": values.get(mdp.start()).render(),
        }))
    }
    let mdp = &instance.mdp;
    let mut report = if exact { run::<BigRational>(mdp, gamma, settings)? } else { run::<f64>(mdp, gamma, settings)? };
    report["gamma"] = gamma.render();
    report["arithmetic"] = json!(arithmetic(exact));
    Ok(Output::new(report, true))
}

fn policy_outputs(mdp: &Mdp, dp: &DynamicPolicy, output: Option<PathBuf>) -> (Value, Vec<(PathBuf, String)>) {
    let file = dynamic_policy_to_file(mdp, dp);
    let files = output.map(|p| vec![(p, to_json(&file))]).unwrap_or_default();
    (serde_json::to_value(&file).expect("serializable"), files)
}

pub fn spe(instance: &Instance, exact: bool, output: Option<PathBuf>, settings: &Settings) -> Result<Output> {
    fn run<S: Scalar + Render>(mdp: &Mdp, g: &DiscountFunction, settings: &Settings) -> Result<(DynamicPolicy, Value, bool)> {
        let gs = compute_gamma_set(mdp, settings)?;
        let dp = compute_exact_spe::<S>(mdp, g, &gs, settings)?;
        let report = check::<S>(mdp, g, &dp, &S::zero(), Some(&gs), settings)?;
        Ok((dp, verification(mdp, &report), report.passed))
    }
    let mdp = &instance.mdp;
    let g = require_discount(instance)?;
    let (dp, verified, passed) = if exact { run::<BigRational>(mdp, g, settings)? } else { run::<f64>(mdp, g, settings)? };
    let (policy, files) = policy_outputs(mdp, &dp, output);
    let report = json!({ "policy": policy, "verification": verified, "arithmetic": arithmetic(exact) });
    Ok(Output { files, ..Output::new(report, passed) })
}

/// Accepts a rational, or `2^k` for a power of two with integer exponent.
pub fn separation(text: &str) -> Result<Magnitude> {
    if let Some(exp) = text.trim().strip_prefix("2^") {
        let exp: BigInt = exp.trim_matches(|c| c == '(' || c == ')').parse().ok().context("separation: bad exponent")?;
        return Ok(Magnitude::pow2(exp));
    }
    let d = rational(text, "separation")?;
    if d <= BigRational::from_integer(0.into()) {
        bail!("separation must be positive");
    }
    Ok(Magnitude::from_rational(d))
}

pub struct EpsArgs {
    pub eps: BigRational,
    pub c: Option<BigRational>,
    pub unknown_gap: bool,
    pub separation: Option<Magnitude>,
}

pub fn eps_spe(instance: &Instance, args: &EpsArgs, exact: bool, output: Option<PathBuf>, settings: &Settings) -> Result<Output> {
    fn run<S: Scalar + Render>(
        mdp: &Mdp,
        g: &DiscountFunction,
        args: &EpsArgs,
        settings: &Settings,
    ) -> Result<(DynamicPolicy, Value, Value, bool)> {
        let (dp, details) = if args.unknown_gap {
            let run = compute_eps_spe_unknown_gap::<S>(mdp, g, &args.eps, args.separation.clone(), settings)?;
            let source = match &run.source {
                SeparationSource::Supplied => json!("supplied"),
                SeparationSource::ExactGap => json!("exact_gap"),
                SeparationSource::Theoretical(b) => json!({
                    "theoretical": { "log2_lower": b.log2_lower.to_string(), "heuristic": b.heuristic }
                }),
            };
            let details = json!({
                "algorithm": "unknown_gap",
                "branch": match run.branch { Branch::Exact => "exact", Branch::Epsilon => "epsilon" },
                "separation": { "floor_log2": run.separation.floor_log2().to_string(), "value": run.separation.to_string() },
                "source": source,
                "t_first": run.t_first.to_string(),
                "t_second": run.t_second.as_ref().map(BigUint::to_string),
            });
            (run.policy, details)
        } else {
            let c = args.c.as_ref().context("--c is required unless --unknown-gap is given")?;
            let dp = compute_eps_spe::<S>(mdp, g, &args.eps, c, settings)?;
            (dp, json!({ "algorithm": "known_margin", "c": format_rational(c) }))
        };
        let report = check::<S>(mdp, g, &dp, &S::from_exact(&args.eps), None, settings)?;
        Ok((dp, details, verification(mdp, &report), report.passed))
    }
    let mdp = &instance.mdp;
    let g = require_discount(instance)?;
    let (dp, details, verified, passed) =
        if exact { run::<BigRational>(mdp, g, args, settings)? } else { run::<f64>(mdp, g, args, settings)? };
    let (policy, files) = policy_outputs(mdp, &dp, output);
    let report = json!({
        "policy": policy,
        "construction": details,
        "verification": verified,
        "arithmetic": arithmetic(exact),
    });
    Ok(Output { files, ..Output::new(report, passed) })
}

pub fn gamma_set(instance: &Instance, width: &BigRational, settings: &Settings) -> Result<Output> {
    let mdp = &instance.mdp;
    let mut gs = compute_gamma_set(mdp, settings)?;
    gs.refine(width);
    let points: Vec<Value> = gs
        .points()
        .iter()
        .map(|p| {
            json!({
                "lo": p.lo().render(),
                "hi": p.hi().render(),
                "approx": crate::report::decimal(p.approx()),
                "polynomial": p.polynomial().coeffs().iter().map(format_rational).collect::<Vec<_>>(),
                "witnesses": [policy_map(mdp, &p.witnesses.0), policy_map(mdp, &p.witnesses.1)],
            })
        })
        .collect();
    let n = mdp.n_states() as u64;
    let m = mdp.action_union_size() as u64;
    let b = mdp.bit_size();
    let bound = match separation_bound(n, m, b) {
        Ok(sb) => json!({
            "n": n, "m": m, "b": b,
            "log2_lower": sb.log2_lower.to_string(),
            "log2_upper": sb.log2_upper.to_string(),
            "exact": sb.exact,
            "heuristic": sb.heuristic,
            "min_gap_at_least_bound": sb.is_below(&gs.min_gap()),
        }),
        Err(e) => json!({ "n": n, "m": m, "b": b, "error": e.to_string() }),
    };
    let report = json!({
        "points": points,
        "classes": gs.class_count(),
        "min_gap": gs.min_gap().render(),
        "separation_bound": bound,
    });
    Ok(Output::new(report, true))
}

pub fn verify(
    instance: &Instance,
    dp: &DynamicPolicy,
    eps: &BigRational,
    with_gamma_set: bool,
    exact: bool,
    settings: &Settings,
) -> Result<Output> {
    fn run<S: Scalar + Render>(
        mdp: &Mdp,
        g: &DiscountFunction,
        dp: &DynamicPolicy,
        eps: &BigRational,
        with_gamma_set: bool,
        settings: &Settings,
    ) -> Result<(Value, bool)> {
        let gs = if with_gamma_set { Some(compute_gamma_set(mdp, settings)?) } else { None };
        let report = check::<S>(mdp, g, dp, &S::from_exact(eps), gs.as_ref(), settings)?;
        Ok((verification(mdp, &report), report.passed))
    }
    let mdp = &instance.mdp;
    let g = require_discount(instance)?;
    let (mut report, passed) = if exact {
        run::<BigRational>(mdp, g, dp, eps, with_gamma_set, settings)?
    } else {
        run::<f64>(mdp, g, dp, eps, with_gamma_set, settings)?
    };
    report["arithmetic"] = json!(arithmetic(exact));
    Ok(Output::new(report, passed))
}

pub struct ValItArgs {
    pub gamma: BigRational,
    pub horizon: BigUint,
    pub action: String,
}

fn valit_instance(instance: &Instance, args: &ValItArgs) -> Result<ValItInstance> {
    let mdp = instance.mdp.clone();
    let action = action_index(&mdp, &args.action)?;
    Ok(ValItInstance::new(mdp, args.gamma.clone(), action, args.horizon.clone())?)
}

pub fn reduce(instance: &Instance, args: &ValItArgs, output: Option<PathBuf>) -> Result<Output> {
    let gadget = build_gadget(&valit_instance(instance, args)?)?;
    let text = to_json(&instance_to_file(&gadget.mdp, Some(&gadget.discount)));
    let report = json!({
        "states": gadget.mdp.n_states(),
        "bound": gadget.bound.render(),
        "discount_step": gadget.step().to_string(),
        "flagged_action": args.action,
    });
    let mut out = Output::new(report, true);
    match output {
        Some(path) => out.files.push((path, text)),
        None => out.raw = Some(text),
    }
    Ok(out)
}

pub fn valit(instance: &Instance, args: &ValItArgs, exact: bool, settings: &Settings) -> Result<Output> {
    let inst = valit_instance(instance, args)?;
    let (answer, argmax) = if exact {
        (solve_valit::<BigRational>(&inst, settings)?, valit_argmax::<BigRational>(&inst, settings)?)
    } else {
        (solve_valit::<f64>(&inst, settings)?, valit_argmax::<f64>(&inst, settings)?)
    };
    let start = inst.mdp.start();
    let names: Vec<&str> = argmax.iter().map(|a| inst.mdp.action(start, *a).name.as_str()).collect();
    let report = json!({
        "answer": answer,
        "optimal_first_actions": names,
        "arithmetic": arithmetic(exact),
    });
    Ok(Output::new(report, answer))
}

pub fn spe_start(instance: &Instance, args: &ValItArgs, method: Method, settings: &Settings) -> Result<Output> {
    let gadget = build_gadget(&valit_instance(instance, args)?)?;
    let answer = answer_spe_start(&gadget, method, settings)?;
    let witness = answer.witness.as_ref().map(|dp| dynamic_policy_to_file(&gadget.mdp, dp));
    let report = json!({
        "answer": answer.answer,
        "examined": answer.examined,
        "method": format!("{method:?}").to_lowercase(),
        "witness": witness,
    });
    Ok(Output::new(report, answer.answer))
}

pub fn demo_reversal() -> Result<Output> {
    let r = preference_reversal_demo()?;
    let rows: Vec<Value> = r
        .rows
        .iter()
        .map(|row| {
            json!({
                "gamma": row.gamma.render(),
                "value_a": row.value_a.render(),
                "value_b": row.value_b.render(),
                "preferred": if row.prefers_a() { "A" } else if row.value_a == row.value_b { "tie" } else { "B" },
            })
        })
        .collect();
    let report = json!({
        "rows": rows,
        "two_phase": {
            "early": r.early.render(),
            "late": r.late.render(),
            "planned_at_step_0": r.planned,
            "value_a_at_step_1": r.revisit_a.render(),
            "value_b_at_step_1": r.revisit_b.render(),
            "abandoned_at_step_1": r.abandoned,
        },
    });
    Ok(Output::new(report, true))
}
