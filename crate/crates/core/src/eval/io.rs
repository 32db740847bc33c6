//! Readers and writers for the evaluation interchange files.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{EdgeSet, EvalError};

#[derive(Serialize, Deserialize)]
struct EdgeLine {
    product_id: String,
    pairs: Vec<(String, String)>,
}

fn schema(line: usize, message: impl Into<String>) -> EvalError {
    EvalError::Schema {
        line,
        message: message.into(),
    }
}

/// One product per line: `{"product_id": "...", "pairs": [[key, value], ...]}`.
/// Blank lines are ignored; a product appearing twice has its pairs unioned.
pub fn read_edge_set<R: BufRead>(reader: R) -> Result<EdgeSet, EvalError> {
    let mut set = EdgeSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| schema(i + 1, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: EdgeLine = serde_json::from_str(&line).map_err(|e| schema(i + 1, e.to_string()))?;
        set.entry(rec.product_id).or_default().extend(rec.pairs);
    }
    Ok(set)
}

pub fn write_edge_set<W: Write>(set: &EdgeSet, mut out: W) -> std::io::Result<()> {
    for (id, pairs) in set {
        let rec = EdgeLine {
            product_id: id.clone(),
            pairs: pairs.iter().cloned().collect(),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

fn parse_json(text: &str) -> Result<Value, EvalError> {
    serde_json::from_str(text).map_err(|e| schema(e.line(), e.to_string()))
}

fn label(v: &Value) -> Result<String, EvalError> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        other => Err(schema(1, format!("labels must be scalars, got {other}"))),
    }
}

/// A JSON array of scalar labels.
pub fn read_labels(text: &str) -> Result<Vec<String>, EvalError> {
    match parse_json(text)? {
        Value::Array(xs) => xs.iter().map(label).collect(),
        _ => Err(schema(1, "expected a JSON array of labels")),
    }
}

/// A JSON object mapping judge name to its label array.
pub fn read_panel(text: &str) -> Result<BTreeMap<String, Vec<String>>, EvalError> {
    match parse_json(text)? {
        Value::Object(m) => m
            .into_iter()
            .map(|(judge, v)| match v {
                Value::Array(xs) => Ok((judge, xs.iter().map(label).collect::<Result<_, _>>()?)),
                _ => Err(schema(1, format!("judge {judge:?} must map to an array"))),
            })
            .collect(),
        _ => Err(schema(1, "expected a JSON object of judge -> labels")),
    }
}

/// A JSON object mapping model id to its reliability prior.
pub fn read_priors(text: &str) -> Result<BTreeMap<String, f64>, EvalError> {
    serde_json::from_str(text).map_err(|e| schema(e.line(), e.to_string()))
}

/// A JSON object mapping model id to the list of canonical keys it proposed.
pub fn read_keysets(text: &str) -> Result<BTreeMap<String, BTreeSet<String>>, EvalError> {
    serde_json::from_str(text).map_err(|e| schema(e.line(), e.to_string()))
}
