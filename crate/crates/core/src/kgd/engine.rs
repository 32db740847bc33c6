use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use super::{decide, Candidate, Decision, DecisionBackend, DecisionContext, EditAction, KgdError, Neighbor, PolicyVariant};
use crate::exec::Execution;
use crate::graph::{ActionKind, AuditRecord, Edge, EdgeKind, Graph, GraphError, NodeId, NodeKind};
use crate::normalize::normalize;
use crate::retrieval::{EmbedError, EmbeddingProvider, VectorIndex, DEFAULT_K};

/// Where audit timestamps come from. `Logical` reuses the sequence number so
/// that two runs over the same input produce byte-identical snapshots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Clock {
    #[default]
    Logical,
    /// Milliseconds since the Unix epoch.
    Wall,
}

#[derive(Debug, Clone)]
pub struct KgdConfig {
    pub policy: PolicyVariant,
    pub k: usize,
    /// When off, the backend decides without seeing any existing nodes.
    pub use_retrieval_context: bool,
    pub clock: Clock,
}

impl Default for KgdConfig {
    fn default() -> Self {
        KgdConfig {
            policy: PolicyVariant::Basic,
            k: DEFAULT_K,
            use_retrieval_context: true,
            clock: Clock::Logical,
        }
    }
}

/// What happened to one candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub sequence: u64,
    /// What the backend asked for.
    pub requested: EditAction,
    /// What was actually done.
    pub action: ActionKind,
    /// The node the candidate now lives in, if any.
    pub node: Option<NodeId>,
    /// Edges inserted by this candidate.
    pub edges_added: Vec<Edge>,
    pub notes: Vec<String>,
}

impl Outcome {
    pub fn accepted(&self) -> bool {
        self.action != ActionKind::Discard
    }
}

/// Owns the graph and its vector index, and is the only way to mutate them.
pub struct Kgd {
    graph: Graph,
    index: VectorIndex,
    embedder: Arc<dyn EmbeddingProvider>,
    backend: Arc<dyn DecisionBackend>,
    config: KgdConfig,
}

const PRODUCT_BACKEND: &str = "identity";

impl Kgd {
    pub fn new(embedder: Arc<dyn EmbeddingProvider>, backend: Arc<dyn DecisionBackend>, config: KgdConfig) -> Self {
        Kgd {
            graph: Graph::new(),
            index: VectorIndex::new(),
            embedder,
            backend,
            config,
        }
    }

    /// Continue from an existing graph, re-embedding its canonical names.
    pub fn with_graph(
        graph: Graph,
        embedder: Arc<dyn EmbeddingProvider>,
        backend: Arc<dyn DecisionBackend>,
        config: KgdConfig,
    ) -> Result<Self, EmbedError> {
        let mut index = VectorIndex::new();
        for n in graph.nodes().filter(|n| n.kind != NodeKind::Product) {
            index
                .upsert(embedder.as_ref(), n.kind, n.id, &n.name)
                .map_err(|e| EmbedError::ForNode {
                    node: n.id,
                    source: Box::new(e),
                })?;
        }
        Ok(Kgd {
            graph,
            index,
            embedder,
            backend,
            config,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn index(&self) -> &VectorIndex {
        &self.index
    }

    pub fn config(&self) -> &KgdConfig {
        &self.config
    }

    /// Backend id qualified by the policy, as recorded in the audit log.
    pub fn backend_id(&self) -> String {
        format!("{}/{}", self.backend.id(), self.config.policy)
    }

    pub fn into_graph(self) -> Graph {
        self.graph
    }

    /// Retrieve the neighbors a backend will see for this candidate.
    pub fn build_context(&self, candidate: Candidate) -> Result<DecisionContext, KgdError> {
        let policy = self.config.policy;
        if candidate.kind == NodeKind::Product {
            return Ok(DecisionContext {
                candidate,
                neighbors: Vec::new(),
                policy,
                query: None,
            });
        }
        let query = self.embedder.embed(&normalize(&candidate.name))?;
        let neighbors = if self.config.use_retrieval_context && self.config.k > 0 {
            self.index
                .search(candidate.kind, &query, self.config.k, Execution::Auto)
                .into_iter()
                .filter_map(|hit| {
                    let n = self.graph.node(hit.node_id)?;
                    Some(Neighbor {
                        node_id: n.id,
                        name: n.name.clone(),
                        description: n.description.clone(),
                        synonyms: n.synonyms.clone(),
                        score: hit.score,
                        key: self.graph.value_key(n.id),
                    })
                })
                .collect()
        } else {
            Vec::new()
        };
        Ok(DecisionContext {
            candidate,
            neighbors,
            policy,
            query: Some(query),
        })
    }

    pub fn decide(&self, ctx: &DecisionContext) -> Decision {
        if ctx.candidate.kind == NodeKind::Product {
            return Decision {
                action: EditAction::Add,
                backend_id: PRODUCT_BACKEND.into(),
                notes: Vec::new(),
            };
        }
        decide(self.backend.as_ref(), ctx)
    }

    /// Retrieve, decide and apply. Always yields exactly one audit record.
    pub fn submit(&mut self, candidate: Candidate) -> Outcome {
        match self.build_context(candidate.clone()) {
            Ok(ctx) => {
                let decision = self.decide(&ctx);
                self.apply(&ctx, &decision)
            }
            Err(e) => {
                let ctx = DecisionContext {
                    candidate,
                    neighbors: Vec::new(),
                    policy: self.config.policy,
                    query: None,
                };
                let decision = Decision {
                    action: EditAction::Discard,
                    backend_id: self.backend_id(),
                    notes: vec![format!("retrieval failed: {e}")],
                };
                self.apply(&ctx, &decision)
            }
        }
    }

    /// Apply a decision atomically. Anything that would break an invariant
    /// is either degraded to a safe action or rolled back to a discard;
    /// the reason goes into the audit notes.
    pub fn apply(&mut self, ctx: &DecisionContext, decision: &Decision) -> Outcome {
        let cand = &ctx.candidate;
        let mut notes = decision.notes.clone();

        // Embed before touching the graph so a provider failure cannot leave
        // a node without a vector.
        let vector = match decision.action {
            EditAction::Add | EditAction::Replace(_) if cand.kind != NodeKind::Product => match &ctx.query {
                Some(q) => Some(q.clone()),
                None => match self.embedder.embed(&normalize(&cand.name)) {
                    Ok(v) => Some(v),
                    Err(e) => {
                        notes.push(format!("embedding failed: {e}"));
                        return self.finish(cand, decision, ActionKind::Discard, None, Vec::new(), notes);
                    }
                },
            },
            _ => None,
        };

        self.graph.begin();
        let result = match decision.action {
            EditAction::Add => self.apply_add(cand),
            EditAction::Merge(t) => self.apply_merge(cand, t, &mut notes),
            EditAction::Replace(t) => self.apply_replace(cand, t, &mut notes),
            EditAction::Discard => Ok(Applied {
                action: ActionKind::Discard,
                node: None,
                edges: Vec::new(),
                relabeled: false,
            }),
        };
        let applied = match result {
            Ok(a) => {
                self.graph.commit();
                a
            }
            Err(msg) => {
                self.graph.rollback();
                notes.push(msg);
                Applied {
                    action: ActionKind::Discard,
                    node: None,
                    edges: Vec::new(),
                    relabeled: false,
                }
            }
        };

        let fresh = applied.action == ActionKind::Add || applied.relabeled;
        if let (true, Some(node), Some(v)) = (fresh, applied.node, vector) {
            if cand.kind != NodeKind::Product {
                self.index.upsert_vector(cand.kind, node, v);
            }
        }
        self.finish(cand, decision, applied.action, applied.node, applied.edges, notes)
    }

    fn finish(
        &mut self,
        cand: &Candidate,
        decision: &Decision,
        action: ActionKind,
        node: Option<NodeId>,
        edges_added: Vec<Edge>,
        notes: Vec<String>,
    ) -> Outcome {
        let timestamp = match self.config.clock {
            Clock::Logical => self.graph.next_sequence(),
            Clock::Wall => SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis() as u64)
                .unwrap_or(0),
        };
        let sequence = self.graph.append_audit(AuditRecord {
            sequence: 0,
            candidate: cand.snapshot(),
            action,
            target: node,
            backend_id: decision.backend_id.clone(),
            timestamp,
            notes: notes.clone(),
        });
        Outcome {
            sequence,
            requested: decision.action,
            action,
            node,
            edges_added,
            notes,
        }
    }

    fn apply_add(&mut self, cand: &Candidate) -> Result<Applied, String> {
        let id = self
            .graph
            .create_node(cand.kind, &cand.name, cand.description.as_deref())
            .map_err(|e| format!("add rejected: {e}"))?;
        if !cand.examples.is_empty() {
            self.graph.set_examples(id, cand.examples.clone());
        }
        let mut edges = Vec::new();
        for e in &cand.intended_edges {
            let (src, dst) = (e.src.resolve(id), e.dst.resolve(id));
            let fresh = self.graph.check_edge(src, e.kind, dst).map_err(|err| format!("add rejected: {err}"))?;
            self.graph.add_edge(src, e.kind, dst).map_err(|err| format!("add rejected: {err}"))?;
            if fresh {
                edges.push(Edge { src, kind: e.kind, dst });
            }
        }
        if cand.kind == NodeKind::Value && self.graph.value_key(id).is_none() {
            return Err("add rejected: value has no parent key".into());
        }
        Ok(Applied {
            action: ActionKind::Add,
            node: Some(id),
            edges,
            relabeled: false,
        })
    }

    fn check_target(&self, cand: &Candidate, target: NodeId) -> Result<(), String> {
        match self.graph.node(target) {
            None => Err(format!("target {target} does not exist")),
            Some(n) if n.kind != cand.kind => Err(format!("target {target} is a {}, not a {}", n.kind, cand.kind)),
            Some(_) => Ok(()),
        }
    }

    fn apply_merge(&mut self, cand: &Candidate, target: NodeId, notes: &mut Vec<String>) -> Result<Applied, String> {
        self.check_target(cand, target)?;
        let target = match self.graph.merge_into(target, &cand.name) {
            Ok(()) => target,
            Err(GraphError::CrossNodeConflict { owner, .. }) => {
                notes.push(format!("{:?} already names node {owner}; merged there instead of {target}", cand.name));
                owner
            }
            Err(e) => return Err(format!("merge rejected: {e}")),
        };
        let edges = self.attach_edges(cand, target, notes);
        Ok(Applied {
            action: ActionKind::Merge,
            node: Some(target),
            edges,
            relabeled: false,
        })
    }

    fn apply_replace(&mut self, cand: &Candidate, target: NodeId, notes: &mut Vec<String>) -> Result<Applied, String> {
        self.check_target(cand, target)?;
        let (action, node, relabeled) = match self.graph.replace_label(target, &cand.name) {
            Ok(()) => (ActionKind::Replace, target, true),
            Err(GraphError::CrossNodeConflict { owner, .. }) => {
                notes.push(format!(
                    "{:?} already names node {owner}; merged there instead of relabeling {target}",
                    cand.name
                ));
                (ActionKind::Merge, owner, false)
            }
            Err(e) => return Err(format!("replace rejected: {e}")),
        };
        let edges = self.attach_edges(cand, node, notes);
        Ok(Applied {
            action,
            node: Some(node),
            edges,
            relabeled,
        })
    }

    /// Re-point the candidate's edges at an existing node. Edges that would
    /// break an invariant are skipped individually.
    fn attach_edges(&mut self, cand: &Candidate, node: NodeId, notes: &mut Vec<String>) -> Vec<Edge> {
        let key_mismatch = cand.kind == NodeKind::Value
            && match (cand.intended_key(), self.graph.value_key(node)) {
                (Some(want), Some(have)) => want != have,
                _ => false,
            };
        let mut added = Vec::new();
        for e in &cand.intended_edges {
            let (src, dst) = (e.src.resolve(node), e.dst.resolve(node));
            if key_mismatch && matches!(e.kind, EdgeKind::HasValue | EdgeKind::HasAttribute) {
                notes.push(format!("skipped {} {src}->{dst}: value belongs to a different key", e.kind));
                continue;
            }
            match self.graph.check_edge(src, e.kind, dst) {
                Ok(true) => {
                    self.graph.add_edge(src, e.kind, dst).expect("edge was just checked");
                    added.push(Edge { src, kind: e.kind, dst });
                }
                Ok(false) => {}
                Err(err) => notes.push(format!("skipped {} {src}->{dst}: {err}", e.kind)),
            }
        }
        added
    }
}

struct Applied {
    action: ActionKind,
    node: Option<NodeId>,
    edges: Vec<Edge>,
    relabeled: bool,
}
