//! JSON file formats for models, discount functions and policies.
//!
//! Numbers may be JSON numbers, decimal strings or `"p/q"` strings; all are
//! read as exact rationals. A `"p/q"` string anywhere in a model or discount
//! marks the input as exact, which selects rational arithmetic downstream.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use tvdisc_core::mdp::{Action, Mdp, StaticPolicy};
use tvdisc_core::scalar::{format_rational, parse_rational};
use tvdisc_core::spe::DynamicPolicy;
use tvdisc_core::{BigRational, BigUint, DiscountFunction};

/// Malformed input, located by file position or by field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputError {
    pub location: String,
    pub message: String,
}

impl InputError {
    fn at(location: impl Into<String>, message: impl Into<String>) -> Self {
        InputError { location: location.into(), message: message.into() }
    }

    fn syntax(err: serde_json::Error) -> Self {
        InputError::at(format!("line {} column {}", err.line(), err.column()), err.to_string())
    }
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

impl std::error::Error for InputError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Text(String),
    Number(serde_json::Number),
}

impl Num {
    pub fn exact(x: &BigRational) -> Self {
        Num::Text(format_rational(x))
    }

    fn is_fraction(&self) -> bool {
        matches!(self, Num::Text(t) if t.contains('/'))
    }

    fn value(&self, path: &str) -> Result<BigRational, InputError> {
        let text = match self {
            Num::Text(t) => t.clone(),
            Num::Number(n) => n.to_string(),
        };
        parse_rational(&text).ok_or_else(|| InputError::at(path, format!("'{text}' is not a number")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Int {
    Text(String),
    Number(u64),
}

impl Int {
    fn value(&self, path: &str) -> Result<BigUint, InputError> {
        match self {
            Int::Number(n) => Ok(BigUint::from(*n)),
            Int::Text(t) => t
                .trim()
                .parse()
                .map_err(|_| InputError::at(path, format!("'{t}' is not a nonnegative integer"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionFile {
    pub name: String,
    pub reward: Num,
    pub to: BTreeMap<String, Num>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DiscountFile {
    Constant { gamma: Num },
    DownStep { gamma: Num, step: Int },
    TwoPhase { first: Num, second: Num, step: Int },
    GeometricApproach { limit: Num, amplitude: Num, ratio: Num },
    Table { values: Vec<Num>, tail: Num },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub states: Vec<String>,
    pub start: String,
    pub actions: BTreeMap<String, Vec<ActionFile>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discount: Option<DiscountFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicPolicyFile {
    pub switch_time: usize,
    pub prefix: Vec<BTreeMap<String, String>>,
    pub tail: BTreeMap<String, String>,
}

/// A parsed model with its optional discount function.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub mdp: Mdp,
    pub discount: Option<DiscountFunction>,
    /// Some number was written as a `"p/q"` string.
    pub exact: bool,
}

pub fn parse_instance(text: &str) -> Result<Instance, InputError> {
    let file: InstanceFile = serde_json::from_str(text).map_err(InputError::syntax)?;
    instance_from_file(&file)
}

pub fn parse_discount(text: &str) -> Result<(DiscountFunction, bool), InputError> {
    let file: DiscountFile = serde_json::from_str(text).map_err(InputError::syntax)?;
    Ok((discount_from_file(&file, "discount")?, discount_is_exact(&file)))
}

pub fn instance_from_file(file: &InstanceFile) -> Result<Instance, InputError> {
    let n = file.states.len();
    let index = |name: &str, path: &str| {
        file.states
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| InputError::at(path, format!("unknown state '{name}'")))
    };
    for name in file.actions.keys() {
        index(name, "actions")?;
    }
    let mut exact = false;
    let mut actions = Vec::with_capacity(n);
    for state in &file.states {
        let path = format!("actions.{state}");
        let list = file.actions.get(state).ok_or_else(|| InputError::at(&path, "missing action list"))?;
        let mut parsed = Vec::with_capacity(list.len());
        for (i, a) in list.iter().enumerate() {
            let here = format!("{path}[{i}]");
            let reward = a.reward.value(&format!("{here}.reward"))?;
            let mut row = vec![BigRational::from_integer(0.into()); n];
            for (target, p) in &a.to {
                let field = format!("{here}.to.{target}");
                row[index(target, &field)?] = p.value(&field)?;
            }
            exact |= a.reward.is_fraction() || a.to.values().any(Num::is_fraction);
            parsed.push(Action::new(a.name.clone(), reward, row));
        }
        actions.push(parsed);
    }
    let start = index(&file.start, "start")?;
    let mdp = Mdp::new(file.states.clone(), actions, start).map_err(|e| InputError::at("actions", e.to_string()))?;
    let discount = match &file.discount {
        Some(d) => {
            exact |= discount_is_exact(d);
            Some(discount_from_file(d, "discount")?)
        }
        None => None,
    };
    Ok(Instance { mdp, discount, exact })
}

fn discount_is_exact(file: &DiscountFile) -> bool {
    match file {
        DiscountFile::Constant { gamma } | DiscountFile::DownStep { gamma, .. } => gamma.is_fraction(),
        DiscountFile::TwoPhase { first, second, .. } => first.is_fraction() || second.is_fraction(),
        DiscountFile::GeometricApproach { limit, amplitude, ratio } => {
            limit.is_fraction() || amplitude.is_fraction() || ratio.is_fraction()
        }
        DiscountFile::Table { values, tail } => tail.is_fraction() || values.iter().any(Num::is_fraction),
    }
}

pub fn discount_from_file(file: &DiscountFile, path: &str) -> Result<DiscountFunction, InputError> {
    let f = |n: &Num, field: &str| n.value(&format!("{path}.{field}"));
    let built = match file {
        DiscountFile::Constant { gamma } => DiscountFunction::constant(f(gamma, "gamma")?),
        DiscountFile::DownStep { gamma, step } => {
            DiscountFunction::down_step(f(gamma, "gamma")?, step.value(&format!("{path}.step"))?)
        }
        DiscountFile::TwoPhase { first, second, step } => DiscountFunction::two_phase(
            f(first, "first")?,
            f(second, "second")?,
            step.value(&format!("{path}.step"))?,
        ),
        DiscountFile::GeometricApproach { limit, amplitude, ratio } => {
            DiscountFunction::geometric(f(limit, "limit")?, f(amplitude, "amplitude")?, f(ratio, "ratio")?)
        }
        DiscountFile::Table { values, tail } => {
            let values = values
                .iter()
                .enumerate()
                .map(|(i, v)| v.value(&format!("{path}.values[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            DiscountFunction::table(values, f(tail, "tail")?)
        }
    };
    built.map_err(|e| InputError::at(path, e.to_string()))
}

pub fn discount_to_file(g: &DiscountFunction) -> DiscountFile {
    let step = |s: &BigUint| match u64::try_from(s) {
        Ok(v) => Int::Number(v),
        Err(_) => Int::Text(s.to_string()),
    };
    match g {
        DiscountFunction::Constant(gamma) => DiscountFile::Constant { gamma: Num::exact(gamma) },
        DiscountFunction::DownStep { gamma, step: s } => {
            DiscountFile::DownStep { gamma: Num::exact(gamma), step: step(s) }
        }
        DiscountFunction::TwoPhase { first, second, step: s } => {
            DiscountFile::TwoPhase { first: Num::exact(first), second: Num::exact(second), step: step(s) }
        }
        DiscountFunction::GeometricApproach { limit, amplitude, ratio } => DiscountFile::GeometricApproach {
            limit: Num::exact(limit),
            amplitude: Num::exact(amplitude),
            ratio: Num::exact(ratio),
        },
        DiscountFunction::FiniteTable { values, tail } => {
            DiscountFile::Table { values: values.iter().map(Num::exact).collect(), tail: Num::exact(tail) }
        }
    }
}

/// File form of a model; probabilities that are zero are omitted.
pub fn instance_to_file(mdp: &Mdp, discount: Option<&DiscountFunction>) -> InstanceFile {
    let names = mdp.state_names();
    let actions = (0..mdp.n_states())
        .map(|s| {
            let list = mdp
                .actions(s)
                .iter()
                .map(|a| ActionFile {
                    name: a.name.clone(),
                    reward: Num::exact(&a.reward),
                    to: a
                        .transition
                        .iter()
                        .enumerate()
                        .filter(|(_, p)| **p != BigRational::from_integer(0.into()))
                        .map(|(t, p)| (names[t].clone(), Num::exact(p)))
                        .collect(),
                })
                .collect();
            (names[s].clone(), list)
        })
        .collect();
    InstanceFile {
        states: names.to_vec(),
        start: names[mdp.start()].clone(),
        actions,
        discount: discount.map(discount_to_file),
    }
}

pub fn policy_map(mdp: &Mdp, policy: &StaticPolicy) -> BTreeMap<String, String> {
    policy
        .action_names(mdp)
        .into_iter()
        .enumerate()
        .map(|(s, a)| (mdp.state_name(s).to_string(), a.to_string()))
        .collect()
}

pub fn policy_from_map(mdp: &Mdp, map: &BTreeMap<String, String>, path: &str) -> Result<StaticPolicy, InputError> {
    for state in map.keys() {
        if mdp.state_index(state).is_none() {
            return Err(InputError::at(path, format!("unknown state '{state}'")));
        }
    }
    let choices = (0..mdp.n_states())
        .map(|s| {
            let state = mdp.state_name(s);
            let action = map.get(state).ok_or_else(|| InputError::at(path, format!("no action for state '{state}'")))?;
            mdp.action_index(s, action)
                .ok_or_else(|| InputError::at(format!("{path}.{state}"), format!("unknown action '{action}'")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    StaticPolicy::new(mdp, choices).map_err(|e| InputError::at(path, e.to_string()))
}

pub fn dynamic_policy_to_file(mdp: &Mdp, dp: &DynamicPolicy) -> DynamicPolicyFile {
    DynamicPolicyFile {
        switch_time: dp.switch_time(),
        prefix: dp.prefix().iter().map(|p| policy_map(mdp, p)).collect(),
        tail: policy_map(mdp, dp.tail()),
    }
}

pub fn parse_dynamic_policy(text: &str, mdp: &Mdp) -> Result<DynamicPolicy, InputError> {
    let file: DynamicPolicyFile = serde_json::from_str(text).map_err(InputError::syntax)?;
    if file.switch_time != file.prefix.len() {
        return Err(InputError::at(
            "switch_time",
            format!("switch_time is {} but the prefix has {} entries", file.switch_time, file.prefix.len()),
        ));
    }
    let prefix = file
        .prefix
        .iter()
        .enumerate()
        .map(|(t, m)| policy_from_map(mdp, m, &format!("prefix[{t}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let tail = policy_from_map(mdp, &file.tail, "tail")?;
    DynamicPolicy::new(mdp, prefix, tail).map_err(|e| InputError::at("prefix", e.to_string()))
}

/// Pretty JSON with sorted keys and a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    // Going through `Value` sorts every object's keys.
    let value: Value = serde_json::to_value(value).expect("serializable");
    let mut out = serde_json::to_string_pretty(&value).expect("serializable");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use tvdisc_core::instances;
    use tvdisc_core::scalar::ratio;

    #[test]
    fn numbers_parse_exactly() {
        let n: Num = serde_json::from_str("0.95").unwrap();
        assert_eq!(n.value("x").unwrap(), ratio(19, 20));
        let n: Num = serde_json::from_str("\"2/6\"").unwrap();
        assert!(n.is_fraction());
        assert_eq!(n.value("x").unwrap(), ratio(1, 3));
        let n: Num = serde_json::from_str("\"abc\"").unwrap();
        assert!(n.value("x").is_err());
    }

    #[test]
    fn instance_round_trip() {
        let mdp = instances::figure2();
        let g = DiscountFunction::two_phase(ratio(1, 10), ratio(4, 5), BigUint::from(0u32)).unwrap();
        let text = to_json(&instance_to_file(&mdp, Some(&g)));
        let back = parse_instance(&text).unwrap();
        assert_eq!(back.mdp, mdp);
        assert_eq!(back.discount, Some(g));
        assert_eq!(to_json(&instance_to_file(&back.mdp, back.discount.as_ref())), text);
    }

    #[test]
    fn errors_name_the_field() {
        let text = r#"{"states": ["a"], "start": "a", "actions": {"a": [{"name": "x", "reward": 1, "to": {"b": 1}}]}}"#;
        let err = parse_instance(text).unwrap_err();
        assert_eq!(err.location, "actions.a[0].to.b");
        let err = parse_instance("{\"states\": [\"a\"],\n \"start\": 3}").unwrap_err();
        assert!(err.location.starts_with("line 2"));
        let text = r#"{"states": ["a"], "start": "a", "actions": {"a": [{"name": "x", "reward": 1, "to": {"a": "1/2"}}]}}"#;
        let err = parse_instance(text).unwrap_err();
        assert!(err.message.contains("sums to"));
    }

    #[test]
    fn dynamic_policy_switch_time_must_match() {
        let mdp = instances::crossing();
        let text = r#"{"switch_time": 1, "prefix": [], "tail": {"c": "now", "d": "pay", "z": "stay"}}"#;
        assert_eq!(parse_dynamic_policy(text, &mdp).unwrap_err().location, "switch_time");
    }
}
