//! Typed property-graph store.
//!
//! Four node kinds and four edge kinds. Schema edges (`HasKey`, `HasValue`)
//! describe which keys apply to a product type and which key types each value;
//! instance edges (`OfType`, `HasAttribute`) record product facts. A value is
//! typed by exactly one key, and a product may only carry a value whose key is
//! attached to one of the product's types.
//!
//! Mutators are crate-private: [`crate::kgd::Kgd`] is the only writer, and it
//! appends one [`AuditRecord`] per processed candidate.

mod audit;
mod snapshot;

use std::collections::HashMap;
use std::fmt;

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::normalize::normalize;

pub use audit::{ActionKind, AuditRecord, CandidateSnapshot, EdgeEnd, IntendedEdge};
pub use snapshot::{SnapshotError, FORMAT_VERSION};

/// Stable node handle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Product,
    ProductType,
    AttributeKey,
    Value,
}

impl NodeKind {
    pub const ALL: [NodeKind; 4] = [
        NodeKind::Product,
        NodeKind::ProductType,
        NodeKind::AttributeKey,
        NodeKind::Value,
    ];

    /// Human-readable label used in prompts.
    pub fn display_name(self) -> &'static str {
        match self {
            NodeKind::Product => "Product",
            NodeKind::ProductType => "Product Type",
            NodeKind::AttributeKey => "Attribute Key",
            NodeKind::Value => "Value",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeKind::Product => "Product",
            NodeKind::ProductType => "ProductType",
            NodeKind::AttributeKey => "AttributeKey",
            NodeKind::Value => "Value",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    OfType,
    HasKey,
    HasValue,
    HasAttribute,
}

impl EdgeKind {
    pub const ALL: [EdgeKind; 4] = [
        EdgeKind::OfType,
        EdgeKind::HasKey,
        EdgeKind::HasValue,
        EdgeKind::HasAttribute,
    ];

    /// The only legal (src, dst) kinds for this edge.
    pub fn endpoints(self) -> (NodeKind, NodeKind) {
        match self {
            EdgeKind::OfType => (NodeKind::Product, NodeKind::ProductType),
            EdgeKind::HasKey => (NodeKind::ProductType, NodeKind::AttributeKey),
            EdgeKind::HasValue => (NodeKind::AttributeKey, NodeKind::Value),
            EdgeKind::HasAttribute => (NodeKind::Product, NodeKind::Value),
        }
    }
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub src: NodeId,
    pub kind: EdgeKind,
    pub dst: NodeId,
}

/// A canonical node. Synonyms keep their display form; their normalized forms
/// live in the graph's name index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalNode {
    pub id: NodeId,
    pub kind: NodeKind,
    pub name: String,
    pub normalized_name: String,
    pub description: Option<String>,
    pub synonyms: Vec<String>,
    /// Example values; only attribute keys carry them.
    pub examples: Vec<String>,
    pub created_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("name is empty after normalization")]
    EmptyName,
    #[error("{kind} {name:?} collides with existing node {existing}")]
    DuplicateName {
        kind: NodeKind,
        name: String,
        existing: NodeId,
    },
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("{edge} cannot connect {src} to {dst}")]
    KindMismatch {
        edge: EdgeKind,
        src: NodeKind,
        dst: NodeKind,
    },
    #[error("product {product} has no type licensing value {value}")]
    UnlicensedAssertion { product: NodeId, value: NodeId },
    #[error("value {value} is already typed by key {existing}, refusing key {requested}")]
    DoubleTyping {
        value: NodeId,
        existing: NodeId,
        requested: NodeId,
    },
    #[error("{name:?} already belongs to node {owner}, not {target}")]
    CrossNodeConflict {
        target: NodeId,
        owner: NodeId,
        name: String,
    },
}

/// Node and edge counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStats {
    pub nodes: BTreeMap<NodeKind, usize>,
    pub edges: BTreeMap<EdgeKind, usize>,
}

impl GraphStats {
    pub fn node_count(&self, kind: NodeKind) -> usize {
        self.nodes.get(&kind).copied().unwrap_or(0)
    }

    pub fn edge_count(&self, kind: EdgeKind) -> usize {
        self.edges.get(&kind).copied().unwrap_or(0)
    }

    pub fn total_nodes(&self) -> usize {
        self.nodes.values().sum()
    }

    pub fn total_edges(&self) -> usize {
        self.edges.values().sum()
    }
}

/// Undo entries for the open transaction, replayed in reverse on rollback.
#[derive(Debug, Clone)]
enum Undo {
    CreateNode { id: NodeId, prev_next_id: u64 },
    AddEdge(Edge),
    AddSynonym { id: NodeId },
    Relabel {
        id: NodeId,
        name: String,
        normalized: String,
        synonyms: Vec<String>,
    },
}

/// The store. `Send + Sync`; readers may share a published `&Graph`.
#[derive(Debug, Clone, Default)]
pub struct Graph {
    nodes: BTreeMap<NodeId, CanonicalNode>,
    // (kind, normalized form) -> owner, covering names and synonyms
    names: HashMap<(NodeKind, String), NodeId>,
    edges: IndexSet<Edge>,
    out_edges: HashMap<NodeId, IndexSet<(EdgeKind, NodeId)>>,
    in_edges: HashMap<NodeId, IndexSet<(EdgeKind, NodeId)>>,
    value_parent: HashMap<NodeId, NodeId>,
    audit: Vec<AuditRecord>,
    next_id: u64,
    next_seq: u64,
    journal: Option<Vec<Undo>>,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
            && self.edges.iter().eq(other.edges.iter())
            && self.audit == other.audit
            && self.next_id == other.next_id
            && self.next_seq == other.next_seq
    }
}

impl Graph {
    pub fn new() -> Self {
        Graph {
            next_id: 1,
            next_seq: 1,
            ..Default::default()
        }
    }

    // ---- reads ----

    pub fn node(&self, id: NodeId) -> Option<&CanonicalNode> {
        self.nodes.get(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &CanonicalNode> {
        self.nodes.values()
    }

    pub fn nodes_of_kind(&self, kind: NodeKind) -> impl Iterator<Item = &CanonicalNode> {
        self.nodes.values().filter(move |n| n.kind == kind)
    }

    /// Edges in insertion order.
    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter()
    }

    pub fn has_edge(&self, src: NodeId, kind: EdgeKind, dst: NodeId) -> bool {
        self.edges.contains(&Edge { src, kind, dst })
    }

    /// Outgoing `(kind, dst)` pairs in insertion order.
    pub fn out_edges(&self, id: NodeId) -> impl Iterator<Item = (EdgeKind, NodeId)> + '_ {
        self.out_edges.get(&id).into_iter().flatten().copied()
    }

    /// Incoming `(kind, src)` pairs in insertion order.
    pub fn in_edges(&self, id: NodeId) -> impl Iterator<Item = (EdgeKind, NodeId)> + '_ {
        self.in_edges.get(&id).into_iter().flatten().copied()
    }

    pub fn children(&self, id: NodeId, kind: EdgeKind) -> impl Iterator<Item = NodeId> + '_ {
        self.out_edges(id).filter(move |(k, _)| *k == kind).map(|(_, d)| d)
    }

    pub fn parents(&self, id: NodeId, kind: EdgeKind) -> impl Iterator<Item = NodeId> + '_ {
        self.in_edges(id).filter(move |(k, _)| *k == kind).map(|(_, s)| s)
    }

    /// The key typing a value node.
    pub fn value_key(&self, value: NodeId) -> Option<NodeId> {
        self.value_parent.get(&value).copied()
    }

    /// The node of `kind` whose name or synonym normalizes to `normalize(name)`.
    pub fn resolve(&self, kind: NodeKind, name: &str) -> Option<NodeId> {
        self.names.get(&(kind, normalize(name))).copied()
    }

    pub fn audit_log(&self) -> &[AuditRecord] {
        &self.audit
    }

    pub fn next_sequence(&self) -> u64 {
        self.next_seq
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn stats(&self) -> GraphStats {
        let mut stats = GraphStats::default();
        for k in NodeKind::ALL {
            stats.nodes.insert(k, 0);
        }
        for k in EdgeKind::ALL {
            stats.edges.insert(k, 0);
        }
        for n in self.nodes.values() {
            *stats.nodes.entry(n.kind).or_default() += 1;
        }
        for e in &self.edges {
            *stats.edges.entry(e.kind).or_default() += 1;
        }
        stats
    }

    /// Whether a product carries a type that has `key` in its key set.
    pub fn is_licensed(&self, product: NodeId, key: NodeId) -> bool {
        self.children(product, EdgeKind::OfType)
            .any(|t| self.has_edge(t, EdgeKind::HasKey, key))
    }

    // ---- transactional mutation (crate-private) ----

    pub(crate) fn begin(&mut self) {
        debug_assert!(self.journal.is_none(), "nested transaction");
        self.journal = Some(Vec::new());
    }

    pub(crate) fn commit(&mut self) {
        self.journal = None;
    }

    pub(crate) fn rollback(&mut self) {
        let Some(journal) = self.journal.take() else {
            return;
        };
        for undo in journal.into_iter().rev() {
            match undo {
                Undo::CreateNode { id, prev_next_id } => {
                    if let Some(node) = self.nodes.remove(&id) {
                        self.names.remove(&(node.kind, node.normalized_name));
                    }
                    self.out_edges.remove(&id);
                    self.in_edges.remove(&id);
                    self.next_id = prev_next_id;
                }
                Undo::AddEdge(edge) => {
                    let popped = self.edges.pop();
                    debug_assert_eq!(popped, Some(edge));
                    if let Some(set) = self.out_edges.get_mut(&edge.src) {
                        set.pop();
                    }
                    if let Some(set) = self.in_edges.get_mut(&edge.dst) {
                        set.pop();
                    }
                    if edge.kind == EdgeKind::HasValue {
                        self.value_parent.remove(&edge.dst);
                    }
                }
                Undo::AddSynonym { id } => {
                    let node = self.nodes.get_mut(&id).expect("journaled node");
                    if let Some(syn) = node.synonyms.pop() {
                        self.names.remove(&(node.kind, normalize(&syn)));
                    }
                }
                Undo::Relabel {
                    id,
                    name,
                    normalized,
                    synonyms,
                } => {
                    let node = self.nodes.get_mut(&id).expect("journaled node");
                    let kind = node.kind;
                    self.names.remove(&(kind, node.normalized_name.clone()));
                    for s in &node.synonyms {
                        self.names.remove(&(kind, normalize(s)));
                    }
                    node.name = name;
                    node.normalized_name = normalized;
                    node.synonyms = synonyms;
                    self.names.insert((kind, node.normalized_name.clone()), id);
                    for s in &node.synonyms {
                        self.names.insert((kind, normalize(s)), id);
                    }
                }
            }
        }
    }

    fn record(&mut self, undo: Undo) {
        if let Some(j) = self.journal.as_mut() {
            j.push(undo);
        }
    }

    pub(crate) fn create_node(
        &mut self,
        kind: NodeKind,
        name: &str,
        description: Option<&str>,
    ) -> Result<NodeId, GraphError> {
        let normalized = normalize(name);
        if normalized.is_empty() {
            return Err(GraphError::EmptyName);
        }
        if let Some(&existing) = self.names.get(&(kind, normalized.clone())) {
            return Err(GraphError::DuplicateName {
                kind,
                name: name.to_string(),
                existing,
            });
        }
        let id = NodeId(self.next_id);
        self.record(Undo::CreateNode {
            id,
            prev_next_id: self.next_id,
        });
        self.next_id += 1;
        self.names.insert((kind, normalized.clone()), id);
        self.nodes.insert(
            id,
            CanonicalNode {
                id,
                kind,
                name: name.trim().to_string(),
                normalized_name: normalized,
                description: description.map(str::to_string),
                synonyms: Vec::new(),
                examples: Vec::new(),
                created_at: self.next_seq,
            },
        );
        Ok(id)
    }

    /// Only set on nodes created inside the current transaction.
    pub(crate) fn set_examples(&mut self, id: NodeId, examples: Vec<String>) {
        if let Some(n) = self.nodes.get_mut(&id) {
            n.examples = examples;
        }
    }

    /// Check an edge without inserting it. `Ok(false)` means it already exists.
    pub fn check_edge(&self, src: NodeId, kind: EdgeKind, dst: NodeId) -> Result<bool, GraphError> {
        let s = self.nodes.get(&src).ok_or(GraphError::UnknownNode(src))?;
        let d = self.nodes.get(&dst).ok_or(GraphError::UnknownNode(dst))?;
        if kind.endpoints() != (s.kind, d.kind) {
            return Err(GraphError::KindMismatch {
                edge: kind,
                src: s.kind,
                dst: d.kind,
            });
        }
        if self.has_edge(src, kind, dst) {
            return Ok(false);
        }
        match kind {
            EdgeKind::HasValue => {
                if let Some(&existing) = self.value_parent.get(&dst) {
                    return Err(GraphError::DoubleTyping {
                        value: dst,
                        existing,
                        requested: src,
                    });
                }
            }
            EdgeKind::HasAttribute => {
                let licensed = self
                    .value_parent
                    .get(&dst)
                    .is_some_and(|&key| self.is_licensed(src, key));
                if !licensed {
                    return Err(GraphError::UnlicensedAssertion {
                        product: src,
                        value: dst,
                    });
                }
            }
            EdgeKind::OfType | EdgeKind::HasKey => {}
        }
        Ok(true)
    }

    pub(crate) fn add_edge(&mut self, src: NodeId, kind: EdgeKind, dst: NodeId) -> Result<(), GraphError> {
        if !self.check_edge(src, kind, dst)? {
            return Ok(());
        }
        let edge = Edge { src, kind, dst };
        self.edges.insert(edge);
        self.out_edges.entry(src).or_default().insert((kind, dst));
        self.in_edges.entry(dst).or_default().insert((kind, src));
        if kind == EdgeKind::HasValue {
            self.value_parent.insert(dst, src);
        }
        self.record(Undo::AddEdge(edge));
        Ok(())
    }

    pub(crate) fn merge_into(
        &mut self,
        target: NodeId,
        variant_name: &str,
    ) -> Result<(), GraphError> {
        let node = self.nodes.get(&target).ok_or(GraphError::UnknownNode(target))?;
        let kind = node.kind;
        let normalized = normalize(variant_name);
        if normalized.is_empty() {
            return Err(GraphError::EmptyName);
        }
        match self.names.get(&(kind, normalized.clone())) {
            Some(&owner) if owner == target => return Ok(()),
            Some(&owner) => {
                return Err(GraphError::CrossNodeConflict {
                    target,
                    owner,
                    name: variant_name.to_string(),
                })
            }
            None => {}
        }
        self.names.insert((kind, normalized), target);
        self.nodes
            .get_mut(&target)
            .expect("checked above")
            .synonyms
            .push(variant_name.trim().to_string());
        self.record(Undo::AddSynonym { id: target });
        Ok(())
    }

    pub(crate) fn replace_label(&mut self, target: NodeId, new_name: &str) -> Result<(), GraphError> {
        let node = self.nodes.get(&target).ok_or(GraphError::UnknownNode(target))?;
        let kind = node.kind;
        let new_name = new_name.trim();
        let normalized = normalize(new_name);
        if normalized.is_empty() {
            return Err(GraphError::EmptyName);
        }
        if node.name == new_name {
            return Ok(());
        }
        if let Some(&owner) = self.names.get(&(kind, normalized.clone())) {
            if owner != target {
                return Err(GraphError::CrossNodeConflict {
                    target,
                    owner,
                    name: new_name.to_string(),
                });
            }
        }
        let undo = Undo::Relabel {
            id: target,
            name: node.name.clone(),
            normalized: node.normalized_name.clone(),
            synonyms: node.synonyms.clone(),
        };
        let node = self.nodes.get_mut(&target).expect("checked above");
        if normalized != node.normalized_name {
            // the new label may be one of the existing synonyms
            node.synonyms.retain(|s| normalize(s) != normalized);
            let old = std::mem::replace(&mut node.name, new_name.to_string());
            node.synonyms.push(old);
            node.normalized_name = normalized.clone();
        } else {
            // same normalized form, display casing change only
            node.name = new_name.to_string();
        }
        // every name/synonym of this node still maps to it
        self.names.insert((kind, normalized), target);
        self.record(undo);
        Ok(())
    }

    pub(crate) fn append_audit(&mut self, mut record: AuditRecord) -> u64 {
        record.sequence = self.next_seq;
        self.next_seq += 1;
        self.audit.push(record);
        self.next_seq - 1
    }

    // ---- invariants ----

    /// Full invariant sweep. Returns every violation found.
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut errs = Vec::new();
        let mut seen: HashMap<(NodeKind, String), NodeId> = HashMap::new();
        let mut claim = |kind: NodeKind, norm: String, id: NodeId, errs: &mut Vec<String>| {
            if let Some(prev) = seen.insert((kind, norm.clone()), id) {
                errs.push(format!("{kind} form {norm:?} claimed by both {prev} and {id}"));
            }
        };
        for (id, n) in &self.nodes {
            if *id != n.id {
                errs.push(format!("node key {id} holds id {}", n.id));
            }
            if n.normalized_name.is_empty() || n.normalized_name != normalize(&n.name) {
                errs.push(format!("node {id} has bad normalized name {:?}", n.normalized_name));
            }
            if id.0 >= self.next_id {
                errs.push(format!("node {id} not below next_id {}", self.next_id));
            }
            claim(n.kind, n.normalized_name.clone(), *id, &mut errs);
            for s in &n.synonyms {
                let norm = normalize(s);
                if norm == n.normalized_name {
                    errs.push(format!("node {id} lists its own name as synonym"));
                    continue;
                }
                claim(n.kind, norm, *id, &mut errs);
            }
        }
        if seen.len() != self.names.len() {
            errs.push(format!(
                "name index holds {} forms, nodes declare {}",
                self.names.len(),
                seen.len()
            ));
        }
        for (form, id) in &seen {
            if self.names.get(form) != Some(id) {
                errs.push(format!("name index disagrees on {form:?}"));
            }
        }

        let mut parents: HashMap<NodeId, usize> = HashMap::new();
        for e in &self.edges {
            let (Some(s), Some(d)) = (self.nodes.get(&e.src), self.nodes.get(&e.dst)) else {
                errs.push(format!("edge {e:?} has a dangling endpoint"));
                continue;
            };
            if e.kind.endpoints() != (s.kind, d.kind) {
                errs.push(format!("edge {e:?} connects {} to {}", s.kind, d.kind));
            }
            if e.kind == EdgeKind::HasValue {
                *parents.entry(e.dst).or_default() += 1;
            }
        }
        for n in self.nodes.values().filter(|n| n.kind == NodeKind::Value) {
            let count = parents.get(&n.id).copied().unwrap_or(0);
            if count != 1 {
                errs.push(format!("value {} has {count} HasValue parents", n.id));
            }
        }
        for e in self.edges.iter().filter(|e| e.kind == EdgeKind::HasAttribute) {
            let licensed = self
                .value_parent
                .get(&e.dst)
                .is_some_and(|&k| self.is_licensed(e.src, k));
            if !licensed {
                errs.push(format!("HasAttribute {} -> {} is unlicensed", e.src, e.dst));
            }
        }
        let adjacency: usize = self.out_edges.values().map(|s| s.len()).sum();
        if adjacency != self.edges.len() {
            errs.push("adjacency out of sync with edge set".to_string());
        }

        for (i, r) in self.audit.iter().enumerate() {
            let expected = self.audit[0].sequence + i as u64;
            if r.sequence != expected {
                errs.push(format!("audit sequence gap at {i}: {} != {expected}", r.sequence));
            }
        }
        if let Some(last) = self.audit.last() {
            if last.sequence >= self.next_seq {
                errs.push("audit sequence not below next_seq".to_string());
            }
        }

        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }
}
