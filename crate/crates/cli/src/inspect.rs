use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use pkgraph::graph::{EdgeKind, Graph, NodeId, NodeKind};

use crate::Failure;

/// Name lookup tries kinds in this order unless one is given.
const LOOKUP_ORDER: [NodeKind; 4] = [NodeKind::ProductType, NodeKind::AttributeKey, NodeKind::Value, NodeKind::Product];

const EDGE_KINDS: [EdgeKind; 4] = [EdgeKind::OfType, EdgeKind::HasKey, EdgeKind::HasValue, EdgeKind::HasAttribute];

pub fn load_graph(path: &Path) -> Result<Graph, Failure> {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Failure::usage(format!("graph not found: {}", path.display())))
        }
        Err(e) => return Err(Failure::usage(format!("cannot read graph {}: {e}", path.display()))),
    };
    Graph::load_slice(&bytes).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

/// A numeric query is an id when such a node exists; otherwise it is a name.
pub fn find(graph: &Graph, query: &str, kind: Option<NodeKind>) -> Result<NodeId, Failure> {
    if let Ok(n) = query.trim().parse::<u64>() {
        if let Some(node) = graph.node(NodeId(n)) {
            if kind.is_none_or(|k| k == node.kind) {
                return Ok(node.id);
            }
        }
    }
    let kinds: Vec<NodeKind> = match kind {
        Some(k) => vec![k],
        None => LOOKUP_ORDER.to_vec(),
    };
    kinds
        .into_iter()
        .find_map(|k| graph.resolve(k, query))
        .ok_or_else(|| Failure::domain(format!("no node matches {query:?}")))
}

fn label(graph: &Graph, id: NodeId) -> String {
    match graph.node(id) {
        Some(n) => format!("{} {} {:?}", n.id, n.kind, n.name),
        None => format!("{id} <missing>"),
    }
}

fn group(out: &mut String, title: String, ids: Vec<NodeId>, graph: &Graph, limit: usize) {
    if ids.is_empty() {
        return;
    }
    let _ = writeln!(out, "{title} ({})", ids.len());
    for &id in ids.iter().take(limit) {
        let _ = writeln!(out, "  {}", label(graph, id));
    }
    if ids.len() > limit {
        let _ = writeln!(out, "  ... {} more", ids.len() - limit);
    }
}

pub fn render(graph: &Graph, id: NodeId, limit: usize) -> String {
    let node = graph.node(id).expect("caller resolved the id");
    let mut out = String::new();
    let _ = writeln!(out, "{}", label(graph, id));
    if let Some(d) = &node.description {
        let _ = writeln!(out, "  description: {d}");
    }
    if !node.synonyms.is_empty() {
        let _ = writeln!(out, "  synonyms: {}", node.synonyms.join(", "));
    }
    if !node.examples.is_empty() {
        let _ = writeln!(out, "  examples: {}", node.examples.join(", "));
    }
    let _ = writeln!(out, "  created at: {}", node.created_at);
    for kind in EDGE_KINDS {
        let mut ids: Vec<NodeId> = graph.children(id, kind).collect();
        ids.sort();
        group(&mut out, format!("{kind} ->"), ids, graph, limit);
    }
    for kind in EDGE_KINDS {
        let mut ids: Vec<NodeId> = graph.parents(id, kind).collect();
        ids.sort();
        group(&mut out, format!("<- {kind}"), ids, graph, limit);
    }
    out
}
