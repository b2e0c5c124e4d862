//! JSON file formats and report serialization.
//!
//! Non-finite numbers are written as the strings `"inf"`, `"-inf"` and `"nan"`.

use std::path::Path;

use divbound_core::tci::Witness;
use divbound_core::{
    BoundReport, ConvexRate, DiscreteMeasure, FiniteMetricSpace, RateShape, RealFunction, TciReport, TransportResult,
};
use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceFile {
    pub labels: Vec<String>,
    pub metric: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureFile {
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionFile {
    pub values: Vec<f64>,
}

/// A rate constant, either given or derived from the space.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Constant {
    Value(f64),
    Auto(AutoTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum RateSpec {
    Quadratic { c: Constant },
    Power { c: Constant, beta: f64 },
    Tabulated { grid: Vec<f64>, values: Vec<f64> },
}

impl RateSpec {
    pub fn is_auto(&self) -> bool {
        matches!(self, RateSpec::Quadratic { c: Constant::Auto(_) } | RateSpec::Power { c: Constant::Auto(_), .. })
    }

    /// Builds the rate. `auto` needs a space and becomes `diam²/4`;
    /// `scale` multiplies the constant (the values, for tables).
    pub fn resolve(&self, space: Option<&FiniteMetricSpace>, scale: f64) -> CliResult<ConvexRate> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(CliError::Config(format!("constant scale must be positive, got {scale}")));
        }
        let constant = |c: &Constant| -> CliResult<f64> {
            match c {
                Constant::Value(v) => Ok(*v * scale),
                Constant::Auto(_) => {
                    let space = space.ok_or_else(|| CliError::Config("constant `auto` needs a space".into()))?;
                    let d = space.diameter();
                    Ok(d * d / 4.0 * scale)
                }
            }
        };
        Ok(match self {
            RateSpec::Quadratic { c } => ConvexRate::quadratic(constant(c)?)?,
            RateSpec::Power { c, beta } => ConvexRate::power(constant(c)?, *beta)?,
            RateSpec::Tabulated { grid, values } => {
                ConvexRate::tabulated(grid.clone(), values.iter().map(|v| v * scale).collect())?
            }
        })
    }
}

/// Quotes bare `auto` tokens so that `{"c":auto}` parses.
pub fn normalize_auto(text: &str) -> String {
    let bytes = text.as_bytes();
    let mut out = String::with_capacity(text.len() + 8);
    let mut in_string = false;
    let mut escaped = false;
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i];
        if in_string {
            if escaped {
                escaped = false;
            } else if ch == b'\\' {
                escaped = true;
            } else if ch == b'"' {
                in_string = false;
            }
        } else if ch == b'"' {
            in_string = true;
        } else if text[i..].starts_with("auto") {
            let before = i.checked_sub(1).map(|k| bytes[k]);
            let after = bytes.get(i + 4).copied();
            let word = |b: Option<u8>| b.is_some_and(|b| b.is_ascii_alphanumeric() || b == b'_');
            if !word(before) && !word(after) {
                out.push_str("\"auto\"");
                i += 4;
                continue;
            }
        }
        // copy one UTF-8 scalar
        let width = text[i..].chars().next().map_or(1, char::len_utf8);
        out.push_str(&text[i..i + width]);
        i += width;
    }
    out
}

pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> CliResult<T> {
    serde_json::from_str(&normalize_auto(text)).map_err(|source| CliError::Json { what: what.to_string(), source })
}

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    parse_json(&read_text(path)?, &path.display().to_string())
}

pub fn load_space(path: &Path) -> CliResult<FiniteMetricSpace> {
    let file: SpaceFile = read_json(path)?;
    Ok(FiniteMetricSpace::new(file.labels, file.metric)?)
}

pub fn load_measure(path: &Path) -> CliResult<DiscreteMeasure> {
    let file: MeasureFile = read_json(path)?;
    Ok(DiscreteMeasure::new(file.weights)?)
}

pub fn load_function(path: &Path) -> CliResult<RealFunction> {
    let file: FunctionFile = read_json(path)?;
    Ok(RealFunction::new(file.values)?)
}

pub fn space_json(space: &FiniteMetricSpace) -> Value {
    let n = space.len();
    let rows: Vec<Value> = (0..n).map(|i| floats((0..n).map(|j| space.distance(i, j)))).collect();
    json!({ "labels": space.labels(), "metric": rows })
}

pub fn rate_json(rate: &ConvexRate) -> Value {
    match rate.shape() {
        RateShape::Quadratic { c } => json!({ "kind": "quadratic", "c": num(*c) }),
        RateShape::Power { c, beta } => json!({ "kind": "power", "c": num(*c), "beta": num(*beta) }),
        RateShape::Tabulated { grid, values } => {
            json!({ "kind": "tabulated", "grid": floats(grid.iter().copied()), "values": floats(values.iter().copied()) })
        }
    }
}

/// A JSON number, or a string for non-finite values.
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        json!("nan")
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

pub fn floats<I: IntoIterator<Item = f64>>(values: I) -> Value {
    Value::Array(values.into_iter().map(num).collect())
}

pub fn transport_json(result: &TransportResult) -> Value {
    let mut out = Map::new();
    out.insert("distance".into(), num(result.distance));
    out.insert("p".into(), num(result.p));
    out.insert("duality_gap".into(), num(result.duality_gap));
    out.insert("plan".into(), Value::Array(result.plan.rows().into_iter().map(floats).collect()));
    if let Some(f) = &result.dual_potential {
        out.insert("dual_potential".into(), floats(f.values().iter().copied()));
    }
    Value::Object(out)
}

fn witness_json(w: &Witness) -> Value {
    let opt = |v: &Option<Vec<f64>>| v.as_ref().map_or(Value::Null, |v| floats(v.iter().copied()));
    json!({
        "trial": w.trial,
        "lhs": num(w.lhs),
        "bound": num(w.bound),
        "slack": num(w.slack),
        "nu": opt(&w.nu),
        "f": opt(&w.f),
        "lambda": w.lambda.map_or(Value::Null, num),
    })
}

pub fn tci_report_json(report: &TciReport) -> Value {
    json!({
        "trials": report.trials,
        "violations": report.violations,
        "skipped": report.skipped,
        "worst_slack": num(report.worst_slack),
        "tolerance": num(report.tolerance),
        "constant": report.constant.map_or(Value::Null, num),
        "passed": report.passed(),
        "witnesses": report.witnesses.iter().map(witness_json).collect::<Vec<_>>(),
    })
}

pub fn bound_report_json(r: &BoundReport) -> Value {
    let entry = |b: Option<divbound_core::learning::BoundEntry>| {
        b.map_or(Value::Null, |b| json!({ "value": num(b.value), "hypothesis_ok": b.hypothesis_ok }))
    };
    json!({
        "gamma": num(r.gamma),
        "n": r.n,
        "gen_err": num(r.gen_err),
        "abs_gen_err": num(r.abs_gen_err),
        "mutual_information": num(r.mutual_information),
        "per_sample_information": floats(r.per_sample_information.iter().copied()),
        "chi_square": num(r.chi_square),
        "sigma_sq": num(r.sigma_sq),
        "hoeffding_sigma_sq": num(r.hoeffding_sigma_sq),
        "k": num(r.k),
        "k_from_sigma": num(r.k_from_sigma),
        "k_check": r.k_check,
        "mi_bound": entry(r.mi_bound),
        "chi2_bound": entry(r.chi2_bound),
        "ismi_bound": entry(r.ismi_bound),
        "ismi_chi2_bound": entry(r.ismi_chi2_bound),
        "cmi_bound": entry(r.cmi_bound),
        "cmi_constant": r.cmi_constant.map_or(Value::Null, num),
        "generic_mi": num(r.generic_mi),
        "generic_chi2": num(r.generic_chi2),
        "lambda_star": num(r.lambda_star),
        "validity_margin": num(r.validity_margin),
    })
}
