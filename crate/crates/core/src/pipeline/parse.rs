//! Parsers for agent outputs: the one-line type answer, markdown pipe
//! tables and the id-keyed value JSON.

use std::collections::BTreeSet;

use serde_json::Value;
use thiserror::Error;

use super::{KeyProposal, KeyTable};
use crate::graph::NodeId;
use crate::normalize::normalize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OutputError {
    #[error("empty answer")]
    Empty,
    #[error("answer is not a bare product type: {0:?}")]
    NotAType(String),
    #[error("no table rows found")]
    NoTable,
    #[error("no JSON object found: {0}")]
    Json(String),
}

/// Longest answer still accepted as a type name, in words.
const MAX_TYPE_WORDS: usize = 6;

/// First non-empty line, minus wrapping quotes/markup and trailing period.
fn first_line(text: &str) -> &str {
    let line = text.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
    line.trim_matches(|c: char| matches!(c, '"' | '\'' | '`' | '*'))
        .trim_end_matches('.')
        .trim()
}

/// `Ok(None)` is an abstention ("None"). Anything that looks like prose
/// rather than a short noun phrase is rejected so the caller can retry.
pub fn parse_type_answer(text: &str) -> Result<Option<String>, OutputError> {
    let line = first_line(text);
    if line.is_empty() {
        return Err(OutputError::Empty);
    }
    if line.eq_ignore_ascii_case("none") {
        return Ok(None);
    }
    let words = line.split_whitespace().count();
    if words > MAX_TYPE_WORDS || line.contains(':') || line.contains('?') || line.contains('{') {
        return Err(OutputError::NotAType(line.to_string()));
    }
    Ok(Some(line.to_string()))
}

fn is_separator(cells: &[String]) -> bool {
    cells
        .iter()
        .all(|c| !c.is_empty() && c.chars().all(|ch| matches!(ch, '-' | ':' | ' ')))
}

/// Cells of every pipe-table row, separator rows removed. Lines without a
/// pipe are ignored.
pub fn parse_table(text: &str) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for line in text.lines().map(str::trim) {
        if !line.contains('|') {
            continue;
        }
        let inner = line.strip_prefix('|').unwrap_or(line);
        let inner = inner.strip_suffix('|').unwrap_or(inner);
        let cells: Vec<String> = inner.split('|').map(|c| c.trim().to_string()).collect();
        if cells.iter().all(String::is_empty) || is_separator(&cells) {
            continue;
        }
        rows.push(cells);
    }
    rows
}

fn is_header(cells: &[String]) -> bool {
    let first = normalize(&cells[0]);
    first == "attribute name" || first == "attribute id" || first == "name"
}

/// Rows of a key-discovery answer: name, description, comma-separated
/// examples. Short rows are skipped; repeated names keep the first row.
pub fn parse_key_table(text: &str) -> Result<Vec<KeyProposal>, OutputError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for cells in parse_table(text) {
        if is_header(&cells) {
            continue;
        }
        if cells.len() < 3 {
            log::warn!("skipping key-table row with {} cells: {:?}", cells.len(), cells);
            continue;
        }
        let name = cells[0].trim_matches('*').trim().to_string();
        if normalize(&name).is_empty() || !seen.insert(normalize(&name)) {
            continue;
        }
        let examples = cells[2]
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();
        out.push(KeyProposal {
            name,
            description: Some(cells[1].clone()).filter(|d| !d.is_empty()),
            examples,
        });
    }
    if out.is_empty() {
        return Err(OutputError::NoTable);
    }
    Ok(out)
}

/// Two-column (name, value) rows, as produced by the ground-truth prompt.
pub fn parse_pair_table(text: &str) -> Vec<(String, String)> {
    parse_table(text)
        .into_iter()
        .filter(|c| c.len() >= 2 && !is_header(c))
        .filter(|c| !c[0].is_empty() && !c[1].is_empty() && c[0] != "etc.")
        .map(|c| (c[0].clone(), c[1].clone()))
        .collect()
}

/// The table shown to the value extractor, with ids so the answer can refer
/// back to canonical keys.
pub fn render_key_table(table: &KeyTable) -> String {
    let mut out = String::from(
        "| Attribute ID | Attribute Name | Description | Examples |\n|--------------|----------------|-------------|----------|\n",
    );
    for r in &table.rows {
        out.push_str(&format!(
            "| {} | {} | {} | {} |\n",
            r.key_id.0,
            r.name,
            r.description.as_deref().unwrap_or(""),
            r.examples.join(", ")
        ));
    }
    out
}

fn scalar(v: &Value) -> Option<String> {
    let s = match v {
        Value::String(s) => s.trim().to_string(),
        Value::Number(n) => n.to_string(),
        Value::Bool(b) => b.to_string(),
        _ => return None,
    };
    (!s.is_empty()).then_some(s)
}

fn json_object(text: &str) -> Result<serde_json::Map<String, Value>, OutputError> {
    let start = text.find('{').ok_or_else(|| OutputError::Json("no '{'".into()))?;
    let end = text.rfind('}').ok_or_else(|| OutputError::Json("no '}'".into()))?;
    if end < start {
        return Err(OutputError::Json("unbalanced braces".into()));
    }
    match serde_json::from_str::<Value>(&text[start..=end]) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(OutputError::Json("not an object".into())),
        Err(e) => Err(OutputError::Json(e.to_string())),
    }
}

/// Value answers as (key id, raw value) pairs. Ids not in the table are
/// dropped, nulls and empty strings skipped, lists expanded, numbers
/// written in decimal.
pub fn parse_values(text: &str, table: &KeyTable) -> Result<Vec<(NodeId, String)>, OutputError> {
    let obj = json_object(text)?;
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (k, v) in &obj {
        let Some(id) = k.trim().parse::<u64>().ok().map(NodeId) else {
            log::warn!("dropping non-numeric attribute id {k:?}");
            continue;
        };
        if !table.rows.iter().any(|r| r.key_id == id) {
            log::warn!("dropping attribute id {id} not in the key table");
            continue;
        }
        let values: Vec<String> = match v {
            Value::Null => continue,
            Value::Array(xs) => xs.iter().filter_map(scalar).collect(),
            other => scalar(other).into_iter().collect(),
        };
        for value in values {
            if seen.insert((id, normalize(&value))) {
                out.push((id, value));
            }
        }
    }
    Ok(out)
}
