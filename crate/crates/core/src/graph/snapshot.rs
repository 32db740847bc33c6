//! JSON snapshot format.
//!
//! ```json
//! { "nodes": [{"id", "kind", "name", "description", "synonyms", "created_at"}],
//!   "edges": [{"src", "kind", "dst"}],
//!   "audit": [...],
//!   "meta": {"format_version", "next_id", "next_seq"} }
//! ```
//!
//! Attribute-key nodes may also carry an `examples` array.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{AuditRecord, CanonicalNode, Edge, Graph, NodeId, NodeKind};
use crate::normalize::normalize;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("snapshot parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("snapshot is inconsistent: {0}")]
    Invalid(String),
    #[error("unsupported snapshot format_version {0}")]
    Version(u32),
    #[error("snapshot i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for SnapshotError {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            return SnapshotError::Io(e.into());
        }
        SnapshotError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct NodeRecord {
    id: NodeId,
    kind: NodeKind,
    name: String,
    description: Option<String>,
    synonyms: Vec<String>,
    created_at: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    examples: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    format_version: u32,
    next_id: u64,
    next_seq: u64,
}

#[derive(Serialize, Deserialize)]
struct Document {
    nodes: Vec<NodeRecord>,
    edges: Vec<Edge>,
    audit: Vec<AuditRecord>,
    meta: Meta,
}

impl Graph {
    /// Write the snapshot as pretty-printed JSON.
    pub fn snapshot<W: Write>(&self, mut sink: W) -> Result<(), SnapshotError> {
        let doc = Document {
            nodes: self
                .nodes
                .values()
                .map(|n| NodeRecord {
                    id: n.id,
                    kind: n.kind,
                    name: n.name.clone(),
                    description: n.description.clone(),
                    synonyms: n.synonyms.clone(),
                    created_at: n.created_at,
                    examples: n.examples.clone(),
                })
                .collect(),
            edges: self.edges.iter().copied().collect(),
            audit: self.audit.clone(),
            meta: Meta {
                format_version: FORMAT_VERSION,
                next_id: self.next_id,
                next_seq: self.next_seq,
            },
        };
        serde_json::to_writer_pretty(&mut sink, &doc)?;
        sink.write_all(b"\n")?;
        Ok(())
    }

    pub fn to_snapshot_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.snapshot(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    /// Parse a snapshot into a fresh graph; nothing is touched on failure.
    pub fn load<R: Read>(source: R) -> Result<Graph, SnapshotError> {
        let doc: Document = serde_json::from_reader(source)?;
        Self::from_document(doc)
    }

    pub fn load_slice(bytes: &[u8]) -> Result<Graph, SnapshotError> {
        let doc: Document = serde_json::from_slice(bytes)?;
        Self::from_document(doc)
    }

    fn from_document(doc: Document) -> Result<Graph, SnapshotError> {
        if doc.meta.format_version != FORMAT_VERSION {
            return Err(SnapshotError::Version(doc.meta.format_version));
        }
        let mut g = Graph::new();
        for rec in doc.nodes {
            let normalized = normalize(&rec.name);
            if normalized.is_empty() {
                return Err(SnapshotError::Invalid(format!("node {} has an empty name", rec.id)));
            }
            if g.nodes.contains_key(&rec.id) {
                return Err(SnapshotError::Invalid(format!("duplicate node id {}", rec.id)));
            }
            for form in std::iter::once(normalized.clone()).chain(rec.synonyms.iter().map(|s| normalize(s))) {
                if let Some(prev) = g.names.insert((rec.kind, form.clone()), rec.id) {
                    return Err(SnapshotError::Invalid(format!(
                        "{} form {form:?} claimed by nodes {prev} and {}",
                        rec.kind, rec.id
                    )));
                }
            }
            g.nodes.insert(
                rec.id,
                CanonicalNode {
                    id: rec.id,
                    kind: rec.kind,
                    name: rec.name,
                    normalized_name: normalized,
                    description: rec.description,
                    synonyms: rec.synonyms,
                    examples: rec.examples,
                    created_at: rec.created_at,
                },
            );
        }
        g.next_id = doc.meta.next_id;
        for e in doc.edges {
            g.add_edge(e.src, e.kind, e.dst)
                .map_err(|err| SnapshotError::Invalid(format!("edge {e:?}: {err}")))?;
        }
        g.audit = doc.audit;
        g.next_seq = doc.meta.next_seq;
        g.validate()
            .map_err(|errs| SnapshotError::Invalid(errs.join("; ")))?;
        Ok(g)
    }
}
