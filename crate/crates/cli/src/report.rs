//! Rendering of numbers and reports.

use serde_json::{json, Map, Value};
use tvdisc_core::scalar::format_rational;
use tvdisc_core::verifier::{EquilibriumReport, ReportKind, TailCoverage};
use tvdisc_core::{BigRational, Mdp, Scalar};

/// A JSON rendering of a scalar: 12 significant digits, plus the exact
/// fraction for rationals.
pub trait Render {
    fn render(&self) -> Value;
}

pub fn decimal(x: f64) -> Value {
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    serde_json::Number::from_f64(rounded).map_or_else(|| Value::String(format!("{x}")), Value::Number)
}

impl Render for f64 {
    fn render(&self) -> Value {
        decimal(*self)
    }
}

impl Render for BigRational {
    fn render(&self) -> Value {
        json!({ "decimal": decimal(self.approx_f64()), "exact": format_rational(self) })
    }
}

pub fn per_state<S: Render>(mdp: &Mdp, values: &[S]) -> Value {
    let map: Map<String, Value> =
        values.iter().enumerate().map(|(s, v)| (mdp.state_name(s).to_string(), v.render())).collect();
    Value::Object(map)
}

pub fn verification<S: Scalar + Render>(mdp: &Mdp, report: &EquilibriumReport<S>) -> Value {
    let kind = match &report.kind {
        ReportKind::Exact => json!("exact"),
        ReportKind::Epsilon(e) => json!({ "epsilon": e.render() }),
    };
    let coverage = match report.coverage {
        TailCoverage::GammaCertified { from } => json!({ "gamma_certified_from": from }),
        TailCoverage::Sampled => json!("sampled"),
        TailCoverage::LimitDegenerate => json!("limit_degenerate"),
    };
    let mut positive = Vec::new();
    for (t, row) in report.slack.iter().enumerate() {
        for (s, v) in row.iter().enumerate() {
            if *v > S::zero() {
                positive.push(json!({ "player": t, "state": mdp.state_name(s), "slack": v.render() }));
            }
        }
    }
    json!({
        "passed": report.passed,
        "kind": kind,
        "eps": report.eps.render(),
        "max_slack": report.max_slack.render(),
        "worst": { "player": report.worst.0, "state": mdp.state_name(report.worst.1) },
        "limit_slack": report.limit_slack.as_ref().map(Render::render),
        "horizon_checked": report.horizon_checked,
        "coverage": coverage,
        "note": report.note,
        "positive_slack": positive,
    })
}

/// `key: value` lines with dotted paths, in key order.
pub fn to_text(value: &Value) -> String {
    let mut out = String::new();
    flatten(value, String::new(), &mut out);
    out
}

fn flatten(value: &Value, path: String, out: &mut String) {
    let join = |key: &str| if path.is_empty() { key.to_string() } else { format!("{path}.{key}") };
    match value {
        Value::Object(map) if !map.is_empty() => {
            // An exact number reads better on one line.
            if let (Some(d), Some(Value::String(e)), 2) = (map.get("decimal"), map.get("exact"), map.len()) {
                out.push_str(&format!("{path}: {d} ({e})\n"));
                return;
            }
            for (k, v) in map {
                flatten(v, join(k), out);
            }
        }
        Value::Array(items) if !items.is_empty() => {
            for (i, v) in items.iter().enumerate() {
                flatten(v, format!("{path}[{i}]"), out);
            }
        }
        Value::String(s) => out.push_str(&format!("{path}: {s}\n")),
        other => out.push_str(&format!("{path}: {other}\n")),
    }
}
