use super::{DecisionContext, EditAction, ParseError, PolicyVariant};
use crate::graph::NodeId;

/// Parse a backend answer. Only the first non-empty line counts; the verb
/// must be uppercase and MERGE/REPLACE need a target that was actually
/// shown to the backend. Surrounding quotes, backticks and a trailing
/// period are tolerated.
pub fn parse_action(text: &str, ctx: &DecisionContext) -> Result<EditAction, ParseError> {
    let line = text.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
    let cleaned = line
        .trim_matches(|c: char| matches!(c, '"' | '\'' | '`' | '*'))
        .trim_end_matches(['.', ';', ','])
        .trim();
    let bad = || ParseError::Unparseable(line.to_string());
    let mut parts = cleaned.split_whitespace();
    let verb = parts.next().ok_or_else(bad)?;
    let arg = parts.next();
    if parts.next().is_some() {
        return Err(bad());
    }
    let action = match (verb, arg) {
        ("ADD", None) => EditAction::Add,
        ("DISCARD", None) => EditAction::Discard,
        ("MERGE", Some(id)) | ("REPLACE", Some(id)) => {
            let id = NodeId(id.parse::<u64>().map_err(|_| bad())?);
            if !ctx.has_neighbor(id) {
                return Err(ParseError::UnknownTarget(id));
            }
            if verb == "MERGE" {
                EditAction::Merge(id)
            } else {
                EditAction::Replace(id)
            }
        }
        _ => return Err(bad()),
    };
    if action == EditAction::Discard && ctx.policy == PolicyVariant::NoDiscard {
        return Err(ParseError::Illegal("DISCARD".into(), ctx.policy));
    }
    Ok(action)
}
