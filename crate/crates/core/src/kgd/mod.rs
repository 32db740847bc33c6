//! Knowledge-graph decision: every proposed node passes through here and
//! ends up as exactly one ADD, MERGE, REPLACE or DISCARD.

mod engine;
mod llm;
mod parse;
mod rules;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{CandidateSnapshot, EdgeEnd, EdgeKind, IntendedEdge, NodeId, NodeKind};
use crate::normalize::normalize;

pub use engine::{Clock, Kgd, KgdConfig, Outcome};
pub use llm::LlmDecisionBackend;
pub use parse::parse_action;
pub use rules::{RuleBackend, RuleConfig, DEFAULT_MERGE_THRESHOLD};

/// A proposed node plus the edges it should carry if accepted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub kind: NodeKind,
    pub name: String,
    #[serde(default)]
    pub description: Option<String>,
    /// Which agent produced it and for which listing.
    pub origin: String,
    #[serde(default)]
    pub intended_edges: Vec<IntendedEdge>,
    /// Example values; only meaningful for attribute keys.
    #[serde(default)]
    pub examples: Vec<String>,
}

impl Candidate {
    pub fn new(kind: NodeKind, name: &str, origin: &str) -> Result<Self, KgdError> {
        let name = name.trim();
        if normalize(name).is_empty() {
            return Err(KgdError::EmptyCandidate);
        }
        Ok(Candidate {
            kind,
            name: name.to_string(),
            description: None,
            origin: origin.to_string(),
            intended_edges: Vec::new(),
            examples: Vec::new(),
        })
    }

    pub fn with_description(mut self, description: Option<String>) -> Self {
        self.description = description.filter(|d| !d.trim().is_empty());
        self
    }

    /// Edge from an existing node to the candidate.
    pub fn edge_from(mut self, src: NodeId, kind: EdgeKind) -> Self {
        self.intended_edges.push(IntendedEdge {
            src: EdgeEnd::Node(src),
            kind,
            dst: EdgeEnd::This,
        });
        self
    }

    /// Edge from the candidate to an existing node.
    pub fn edge_to(mut self, kind: EdgeKind, dst: NodeId) -> Self {
        self.intended_edges.push(IntendedEdge {
            src: EdgeEnd::This,
            kind,
            dst: EdgeEnd::Node(dst),
        });
        self
    }

    pub fn with_examples(mut self, examples: Vec<String>) -> Self {
        self.examples = examples;
        self
    }

    /// The key a value candidate is meant to hang under.
    pub fn intended_key(&self) -> Option<NodeId> {
        self.intended_edges.iter().find_map(|e| match (e.kind, e.src, e.dst) {
            (EdgeKind::HasValue, EdgeEnd::Node(k), EdgeEnd::This) => Some(k),
            _ => None,
        })
    }

    pub fn snapshot(&self) -> CandidateSnapshot {
        CandidateSnapshot {
            kind: self.kind,
            name: self.name.clone(),
            description: self.description.clone(),
            origin: self.origin.clone(),
            intended_edges: self.intended_edges.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EditAction {
    Add,
    Merge(NodeId),
    Replace(NodeId),
    Discard,
}

impl EditAction {
    pub fn target(self) -> Option<NodeId> {
        match self {
            EditAction::Merge(t) | EditAction::Replace(t) => Some(t),
            EditAction::Add | EditAction::Discard => None,
        }
    }
}

/// Wire form: `ADD`, `DISCARD`, `MERGE <id>`, `REPLACE <id>`.
impl fmt::Display for EditAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EditAction::Add => f.write_str("ADD"),
            EditAction::Discard => f.write_str("DISCARD"),
            EditAction::Merge(t) => write!(f, "MERGE {}", t.0),
            EditAction::Replace(t) => write!(f, "REPLACE {}", t.0),
        }
    }
}

/// Which decision policy the backend follows. `NoDiscard` forbids DISCARD.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyVariant {
    #[default]
    Basic,
    Strict,
    NoDiscard,
}

impl PolicyVariant {
    pub const ALL: [PolicyVariant; 3] = [PolicyVariant::Basic, PolicyVariant::Strict, PolicyVariant::NoDiscard];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyVariant::Basic => "basic",
            PolicyVariant::Strict => "strict",
            PolicyVariant::NoDiscard => "no-discard",
        }
    }
}

impl fmt::Display for PolicyVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "basic" => Ok(PolicyVariant::Basic),
            "strict" => Ok(PolicyVariant::Strict),
            "no-discard" | "nodiscard" => Ok(PolicyVariant::NoDiscard),
            other => Err(format!("unknown policy {other:?} (expected basic, strict or no-discard)")),
        }
    }
}

/// A retrieved existing node as shown to the decision backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub node_id: NodeId,
    pub name: String,
    pub description: Option<String>,
    pub synonyms: Vec<String>,
    pub score: f32,
    /// Parent key, for value nodes.
    pub key: Option<NodeId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionContext {
    pub candidate: Candidate,
    /// Ranked by score, best first.
    pub neighbors: Vec<Neighbor>,
    pub policy: PolicyVariant,
    /// Embedding of the candidate name, reused when the index is updated.
    pub query: Option<Vec<f32>>,
}

impl DecisionContext {
    pub fn has_neighbor(&self, id: NodeId) -> bool {
        self.neighbors.iter().any(|n| n.node_id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub action: EditAction,
    pub backend_id: String,
    pub notes: Vec<String>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BackendError {
    #[error("backend transport failed: {0}")]
    Transport(String),
    #[error("backend returned an empty response")]
    Empty,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("cannot parse action from {0:?}")]
    Unparseable(String),
    #[error("target {0} is not among the presented neighbors")]
    UnknownTarget(NodeId),
    #[error("{0} is not allowed under the {1} policy")]
    Illegal(String, PolicyVariant),
}

#[derive(Debug, Error)]
pub enum KgdError {
    #[error("candidate name is empty after normalization")]
    EmptyCandidate,
    #[error(transparent)]
    Embed(#[from] crate::retrieval::EmbedError),
}

/// Something that turns a decision context into a textual action.
pub trait DecisionBackend: Send + Sync {
    fn id(&self) -> String;
    fn propose(&self, ctx: &DecisionContext) -> Result<String, BackendError>;
}

/// Ask the backend, allowing one retry on an illegal or unparseable answer
/// or a transport failure. After that the candidate is dropped (or added,
/// under the policy that forbids dropping).
pub fn decide(backend: &dyn DecisionBackend, ctx: &DecisionContext) -> Decision {
    let backend_id = format!("{}/{}", backend.id(), ctx.policy);
    let mut notes = Vec::new();
    for attempt in 1..=2 {
        match backend.propose(ctx) {
            Ok(text) => match parse_action(&text, ctx) {
                Ok(action) => {
                    return Decision {
                        action,
                        backend_id,
                        notes,
                    }
                }
                Err(e) => notes.push(format!("attempt {attempt}: {e}")),
            },
            Err(e) => notes.push(format!("attempt {attempt}: {e}")),
        }
    }
    let action = match ctx.policy {
        PolicyVariant::NoDiscard => EditAction::Add,
        _ => EditAction::Discard,
    };
    notes.push(format!("backend gave no usable action; fell back to {action}"));
    Decision {
        action,
        backend_id,
        notes,
    }
}
