//! Report assembly and serialization shared by the CLI and the FFI layer.
//!
//! A [`Report`] is an ordered list of named sections, each carrying a
//! citation line and a JSON body. Emission normalizes every floating point
//! number to 12 significant digits, so output is byte-stable across runs and
//! survives a parse/emit round trip unchanged.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Json,
    Text,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "text" => Ok(Format::Text),
            other => Err(Error::Parse(format!("unknown format {other:?}; expected json or text"))),
        }
    }
}

/// Overall standing of a run, ordered from best to worst.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Consistent,
    Inconclusive,
    Contradiction,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Consistent => 0,
            Status::Inconclusive => 2,
            Status::Contradiction => 1,
        }
    }

    pub fn combine(self, other: Status) -> Status {
        self.max(other)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Section {
    pub name: String,
    pub citation: String,
    pub body: Value,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub sections: Vec<Section>,
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    pub fn is_empty(&self) -> bool {
        self.sections.is_empty()
    }

    pub fn push<T: Serialize>(&mut self, name: &str, citation: &str, body: &T) -> Result<()> {
        let body = serde_json::to_value(body)?;
        self.sections.push(Section { name: name.into(), citation: citation.into(), body: normalize(body) });
        Ok(())
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn to_value(&self) -> Value {
        let mut top = Map::new();
        for s in &self.sections {
            let mut inner = Map::new();
            inner.insert("citation".into(), Value::String(s.citation.clone()));
            inner.insert("body".into(), s.body.clone());
            top.insert(s.name.clone(), Value::Object(inner));
        }
        Value::Object(top)
    }

    pub fn from_value(v: Value) -> Result<Self> {
        let Value::Object(top) = v else {
            return Err(Error::Parse("report must be a JSON object".into()));
        };
        let mut sections = Vec::with_capacity(top.len());
        for (name, entry) in top {
            let Value::Object(mut inner) = entry else {
                return Err(Error::Parse(format!("section {name:?} is not an object")));
            };
            let citation = match inner.remove("citation") {
                Some(Value::String(c)) => c,
                _ => return Err(Error::Parse(format!("section {name:?} lacks a citation string"))),
            };
            let body = inner.remove("body").unwrap_or(Value::Null);
            sections.push(Section { name, citation, body: normalize(body) });
        }
        Ok(Report { sections })
    }

    pub fn parse(s: &str) -> Result<Self> {
        Report::from_value(serde_json::from_str(s)?)
    }
}

/// Rounds `x` to [`SIGNIFICANT_DIGITS`] significant decimal digits.
pub fn round_significant(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Rounds every non-integer number inside `v`.
pub fn normalize(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_significant(n.as_f64().unwrap_or(0.0));
            serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(normalize).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, normalize(v))).collect()),
        other => other,
    }
}

pub fn emit_report(report: &Report, format: Format) -> String {
    match format {
        Format::Json => {
            let mut out = serde_json::to_string_pretty(&report.to_value()).expect("values always serialize");
            if !report.is_empty() {
                out.push('\n');
            }
            out
        }
        Format::Text => emit_text(report),
    }
}

fn emit_text(report: &Report) -> String {
    let mut out = String::new();
    for (i, s) in report.sections.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "[{}]", s.name);
        let _ = writeln!(out, "citation: {}", s.citation);
        flatten(&mut out, "", &s.body);
    }
    out
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("null".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        _ => None,
    }
}

fn flatten(out: &mut String, prefix: &str, v: &Value) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                flatten(out, &key(k), child);
            }
        }
        Value::Array(items) => {
            let flat: Option<Vec<String>> = items.iter().map(scalar).collect();
            match flat {
                Some(parts) => {
                    let _ = writeln!(out, "{}: [{}]", display_key(prefix), parts.join(", "));
                }
                None if items.iter().all(Value::is_array) => {
                    let rows: Vec<String> = items.iter().map(compact).collect();
                    let _ = writeln!(out, "{}: [{}]", display_key(prefix), rows.join(", "));
                }
                None => {
                    for (i, child) in items.iter().enumerate() {
                        flatten(out, &key(&i.to_string()), child);
                    }
                }
            }
        }
        other => {
            let _ = writeln!(out, "{}: {}", display_key(prefix), scalar(other).unwrap_or_default());
        }
    }
}

fn display_key(prefix: &str) -> &str {
    if prefix.is_empty() {
        "value"
    } else {
        prefix
    }
}

fn compact(v: &Value) -> String {
    match v {
        Value::Array(items) => format!("[{}]", items.iter().map(compact).collect::<Vec<_>>().join(", ")),
        other => scalar(other).unwrap_or_else(|| other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual_dynamics::cyclic_lambda_ergodicity;
    use crate::exact_linalg::IntMatrix;
    use proptest::prelude::{prop_assert_eq, proptest};
    use serde_json::json;

    #[test]
    fn empty_report_is_braces() {
        assert_eq!(emit_report(&Report::new(), Format::Json), "{}");
    }

    #[test]
    fn verdict_round_trips_byte_identically() {
        for a in [[[2, 1], [1, 1]], [[0, -1], [1, 0]]] {
            let v = cyclic_lambda_ergodicity(&IntMatrix::from_i64(&a).unwrap()).unwrap();
            let mut r = Report::new();
            r.push("ergodicity", "orbit criterion on the dual lattice", &v).unwrap();
            let first = emit_report(&r, Format::Json);
            let second = emit_report(&Report::parse(&first).unwrap(), Format::Json);
            assert_eq!(first, second);
        }
    }

    #[test]
    fn field_order_is_insertion_order() {
        let mut r = Report::new();
        r.push("z", "c1", &json!({"b": 1, "a": 2})).unwrap();
        r.push("a", "c2", &json!(null)).unwrap();
        let s = emit_report(&r, Format::Json);
        assert!(s.find("\"z\"").unwrap() < s.find("\"a\": {").unwrap());
        assert!(s.find("\"b\"").unwrap() < s.find("\"a\": 2").unwrap());
    }

    #[test]
    fn text_has_a_citation_per_section() {
        let mut r = Report::new();
        r.push("rigidity", "relative property (T) chain", &json!({"passed": true, "steps": [{"id": 0}]})).unwrap();
        r.push("freeness", "fixed subtori are null", &json!({"per_length": [1, 2, 3], "m": [[1, 0], [0, 1]]})).unwrap();
        let t = emit_report(&r, Format::Text);
        assert!(t.contains("[rigidity]\ncitation: relative property (T) chain\n"));
        assert!(t.contains("citation: fixed subtori are null"));
        assert!(t.contains("steps.0.id: 0"));
        assert!(t.contains("per_length: [1, 2, 3]"));
        assert!(t.contains("m: [[1, 0], [0, 1]]"));
    }

    #[test]
    fn rounding_examples() {
        assert_eq!(round_significant(1.0 / 3.0), 0.333333333333);
        assert_eq!(round_significant(123456789012345.0), 123456789012000.0);
        assert_eq!(round_significant(0.0), 0.0);
        let v = normalize(json!({"x": [2.0f64.sqrt(), 7]}));
        let expected: serde_json::Value = serde_json::from_str(r#"{"x": [1.41421356237, 7]}"#).unwrap();
        assert_eq!(v, expected);
    }

    #[test]
    fn status_combination() {
        assert_eq!(Status::Consistent.combine(Status::Inconclusive), Status::Inconclusive);
        assert_eq!(Status::Inconclusive.combine(Status::Contradiction), Status::Contradiction);
        assert_eq!(Status::Contradiction.exit_code(), 1);
        assert_eq!(Status::Inconclusive.exit_code(), 2);
    }

    proptest! {
        #[test]
        fn rounding_is_idempotent(x in -1e12f64..1e12) {
            let r = round_significant(x);
            prop_assert_eq!(round_significant(r), r);
            let v = normalize(json!({"x": x}));
            let again = normalize(serde_json::from_str(&v.to_string()).unwrap());
            prop_assert_eq!(v, again);
        }
    }
}
