//! Prompt templates shipped with the crate and the small formatting helpers
//! used to fill them.

use std::fmt::Write as _;

use crate::kgd::{Candidate, Neighbor, PolicyVariant};

/// A prompt with `{name}` placeholders. Braces that do not enclose a known
/// placeholder (JSON examples, table syntax) are left alone.
#[derive(Debug, Clone, Copy)]
pub struct Template {
    pub name: &'static str,
    pub text: &'static str,
    pub placeholders: &'static [&'static str],
}

impl Template {
    /// Substitute the given variables. Placeholders without a value stay as
    /// they are so missing inputs are visible in the rendered text.
    pub fn render(&self, vars: &[(&str, &str)]) -> String {
        let mut out = self.text.to_string();
        for (key, value) in vars {
            debug_assert!(self.placeholders.contains(key), "{} has no {{{key}}}", self.name);
            out = out.replace(&format!("{{{key}}}"), value);
        }
        out
    }
}

pub const KGD_BASIC: Template = Template {
    name: "kgd_basic",
    text: include_str!("../assets/prompts/kgd_basic.txt"),
    placeholders: &["pretty_nodes", "node_type", "pretty_candidate"],
};

pub const KGD_STRICT: Template = Template {
    name: "kgd_strict",
    text: include_str!("../assets/prompts/kgd_strict.txt"),
    placeholders: &["pretty_nodes", "node_type", "pretty_candidate"],
};

pub const KGD_NO_DISCARD: Template = Template {
    name: "kgd_no_discard",
    text: include_str!("../assets/prompts/kgd_no_discard.txt"),
    placeholders: &["pretty_nodes", "node_type", "pretty_candidate"],
};

pub const TYPE_SUGGESTION: Template = Template {
    name: "type_suggestion",
    text: include_str!("../assets/prompts/type_suggestion.txt"),
    placeholders: &["title", "description", "specifications"],
};

pub const TYPE_DESCRIPTION: Template = Template {
    name: "type_description",
    text: include_str!("../assets/prompts/type_description.txt"),
    placeholders: &["product_type", "title"],
};

pub const KEY_DISCOVERY: Template = Template {
    name: "key_discovery",
    text: include_str!("../assets/prompts/key_discovery.txt"),
    placeholders: &["product_type", "product_type_description"],
};

pub const VALUE_EXTRACTION: Template = Template {
    name: "value_extraction",
    text: include_str!("../assets/prompts/value_extraction.txt"),
    placeholders: &[
        "product_type",
        "product_type_description",
        "attribute_table",
        "title",
        "highlights",
        "description",
        "specifications",
    ],
};

pub const GT_CONSTRUCTION: Template = Template {
    name: "gt_construction",
    text: include_str!("../assets/prompts/gt_construction.txt"),
    placeholders: &["product_description", "hypotheses"],
};

pub const ALL: [Template; 8] = [
    KGD_BASIC,
    KGD_STRICT,
    KGD_NO_DISCARD,
    TYPE_SUGGESTION,
    TYPE_DESCRIPTION,
    KEY_DISCOVERY,
    VALUE_EXTRACTION,
    GT_CONSTRUCTION,
];

pub fn kgd_template(policy: PolicyVariant) -> Template {
    match policy {
        PolicyVariant::Basic => KGD_BASIC,
        PolicyVariant::Strict => KGD_STRICT,
        PolicyVariant::NoDiscard => KGD_NO_DISCARD,
    }
}

/// Python-style single-quoted string literal.
pub fn py_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out.push('\'');
    out
}

fn py_list(items: &[String]) -> String {
    let inner: Vec<String> = items.iter().map(|s| py_str(s)).collect();
    format!("[{}]", inner.join(", "))
}

/// Neighbors rendered as a list of dicts, one per line. Empty descriptions
/// and synonym lists are omitted.
pub fn pretty_nodes(neighbors: &[Neighbor]) -> String {
    if neighbors.is_empty() {
        return "[]".to_string();
    }
    let mut out = String::from("[");
    for (i, n) in neighbors.iter().enumerate() {
        if i > 0 {
            out.push_str(",\n ");
        }
        let _ = write!(out, "{{'node_id': {}, 'node_name': {}", n.node_id.0, py_str(&n.name));
        if let Some(d) = n.description.as_deref().filter(|d| !d.is_empty()) {
            let _ = write!(out, ", 'description': {}", py_str(d));
        }
        if !n.synonyms.is_empty() {
            let _ = write!(out, ", 'synonyms': {}", py_list(&n.synonyms));
        }
        out.push('}');
    }
    out.push(']');
    out
}

pub fn pretty_candidate(c: &Candidate) -> String {
    let mut out = format!("{{'node_name': {}", py_str(&c.name));
    if let Some(d) = c.description.as_deref().filter(|d| !d.is_empty()) {
        let _ = write!(out, ", 'description': {}", py_str(d));
    }
    out.push('}');
    out
}

/// Render the decision prompt for a candidate and its neighbors.
pub fn render_kgd(policy: PolicyVariant, candidate: &Candidate, neighbors: &[Neighbor]) -> String {
    let nodes = pretty_nodes(neighbors);
    let cand = pretty_candidate(candidate);
    kgd_template(policy).render(&[
        ("pretty_nodes", &nodes),
        ("node_type", candidate.kind.display_name()),
        ("pretty_candidate", &cand),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NodeId;
    use crate::NodeKind;

    #[test]
    fn every_placeholder_appears_in_its_template() {
        for t in ALL {
            for p in t.placeholders {
                assert!(t.text.contains(&format!("{{{p}}}")), "{} lacks {{{p}}}", t.name);
            }
        }
    }

    #[test]
    fn render_leaves_json_braces_alone() {
        let out = VALUE_EXTRACTION.render(&[("product_type", "Lamp")]);
        assert!(out.contains(r#"{"123": "Philips""#));
        assert!(out.contains("Product Type: Lamp"));
        assert!(out.contains("{title}"));
    }

    #[test]
    fn neighbor_repr() {
        let n = vec![
            Neighbor {
                node_id: NodeId(4587),
                name: "Wall Anchors".into(),
                description: Some("Devices used to secure screws".into()),
                synonyms: vec![],
                score: 0.9,
                key: None,
            },
            Neighbor {
                node_id: NodeId(3762),
                name: "Tie-Down Anchor".into(),
                description: None,
                synonyms: vec!["Tie-down loops".into()],
                score: 0.8,
                key: None,
            },
        ];
        assert_eq!(
            pretty_nodes(&n),
            "[{'node_id': 4587, 'node_name': 'Wall Anchors', 'description': 'Devices used to secure screws'},\n \
             {'node_id': 3762, 'node_name': 'Tie-Down Anchor', 'synonyms': ['Tie-down loops']}]"
        );
        let c = Candidate::new(NodeKind::ProductType, "Anchor's", "test").unwrap();
        assert_eq!(pretty_candidate(&c), r"{'node_name': 'Anchor\'s'}");
    }

    #[test]
    fn kgd_prompt_mentions_node_type() {
        let c = Candidate::new(NodeKind::AttributeKey, "Color", "test").unwrap();
        let p = render_kgd(PolicyVariant::NoDiscard, &c, &[]);
        assert!(p.contains("Node Type: Attribute Key"));
        assert!(!p.contains("- DISCARD"));
        let p = render_kgd(PolicyVariant::Basic, &c, &[]);
        assert!(p.contains("- DISCARD"));
    }
}
