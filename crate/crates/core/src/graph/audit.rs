use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use super::{EdgeKind, NodeId, NodeKind};

/// Endpoint of an intended edge: an existing node, or the candidate itself
/// once the decision engine has resolved it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeEnd {
    This,
    Node(NodeId),
}

impl EdgeEnd {
    pub fn resolve(self, this: NodeId) -> NodeId {
        match self {
            EdgeEnd::This => this,
            EdgeEnd::Node(id) => id,
        }
    }
}

impl Serialize for EdgeEnd {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            EdgeEnd::This => s.serialize_str("self"),
            EdgeEnd::Node(id) => s.serialize_u64(id.0),
        }
    }
}

impl<'de> Deserialize<'de> for EdgeEnd {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Id(u64),
            Tag(String),
        }
        match Raw::deserialize(d)? {
            Raw::Id(id) => Ok(EdgeEnd::Node(NodeId(id))),
            Raw::Tag(t) if t == "self" => Ok(EdgeEnd::This),
            Raw::Tag(t) => Err(de::Error::custom(format!("bad edge endpoint {t:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntendedEdge {
    pub src: EdgeEnd,
    pub kind: EdgeKind,
    pub dst: EdgeEnd,
}

/// What the audit log remembers about a proposal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSnapshot {
    pub kind: NodeKind,
    pub name: String,
    #[serde(default)]
    pub description: Option<String>,
    pub origin: String,
    #[serde(default)]
    pub intended_edges: Vec<IntendedEdge>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ActionKind {
    Add,
    Merge,
    Replace,
    Discard,
}

/// One applied decision. `action`/`target` are the effective outcome after
/// any degradation; `notes` say why it differs from what the backend asked for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub sequence: u64,
    pub candidate: CandidateSnapshot,
    pub action: ActionKind,
    pub target: Option<NodeId>,
    pub backend_id: String,
    pub timestamp: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}
