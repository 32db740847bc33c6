//! Per-listing extraction workflow: type induction, key discovery for new
//! types, value extraction, with every proposal consolidated through KGD.

mod agents;
pub mod chat;
pub mod parse;

use std::collections::BTreeMap;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::eval::{compression, EdgeSet};
use crate::exec::{map_slice, Execution};
use crate::graph::{ActionKind, EdgeKind, Graph, GraphStats, NodeId, NodeKind};
use crate::kgd::{Candidate, Kgd, KgdConfig, Outcome, PolicyVariant};
use crate::normalize::normalize;

pub use agents::{
    AgentError, Agents, KeyDiscoverer, LlmKeyDiscoverer, LlmTypeInducer, LlmValueExtractor, RuleKeyDiscoverer,
    RuleTypeInducer, RuleValueExtractor, TypeInducer, TypeProposal, ValueExtractor, TYPE_FIELDS,
};
pub use chat::{GenerationParams, MAX_IMAGES};

/// One product listing as read from the corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Listing {
    pub id: String,
    pub title: String,
    #[serde(default)]
    pub highlights: Option<String>,
    #[serde(default)]
    pub description: Option<String>,
    /// Field name to values. A bare scalar in the input is read as a
    /// one-element list.
    #[serde(default, deserialize_with = "spec_map")]
    pub specifications: IndexMap<String, Vec<String>>,
    #[serde(default)]
    pub image_refs: Vec<String>,
}

fn spec_map<'de, D: Deserializer<'de>>(d: D) -> Result<IndexMap<String, Vec<String>>, D::Error> {
    let raw: IndexMap<String, Value> = IndexMap::deserialize(d)?;
    let scalar = |v: &Value| match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    };
    Ok(raw
        .into_iter()
        .map(|(k, v)| {
            let vs = match &v {
                Value::Array(xs) => xs.iter().filter_map(scalar).collect(),
                other => scalar(other).into_iter().collect(),
            };
            (k, vs)
        })
        .collect())
}

impl Listing {
    pub fn validate(&self) -> Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("listing id is empty".into());
        }
        if self.title.trim().is_empty() {
            return Err(format!("listing {} has an empty title", self.id));
        }
        if self.image_refs.len() > MAX_IMAGES {
            return Err(format!(
                "listing {} has {} images, more than {MAX_IMAGES}",
                self.id,
                self.image_refs.len()
            ));
        }
        Ok(())
    }

    /// Specifications as compact JSON, as shown in prompts.
    pub fn specs_json(&self) -> String {
        serde_json::to_string(&self.specifications).expect("string map serializes")
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("corpus i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Read a JSON-lines corpus. Blank lines are skipped; ids must be unique.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Vec<Listing>, CorpusError> {
    let mut out: Vec<Listing> = Vec::new();
    let mut ids = std::collections::HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| CorpusError::Line { line: i + 1, message };
        let listing: Listing = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
        listing.validate().map_err(err)?;
        if !ids.insert(listing.id.clone()) {
            return Err(err(format!("duplicate listing id {:?}", listing.id)));
        }
        out.push(listing);
    }
    Ok(out)
}

/// A key proposed by the discovery agent, before consolidation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyProposal {
    pub name: String,
    pub description: Option<String>,
    pub examples: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyRow {
    pub key_id: NodeId,
    pub name: String,
    pub description: Option<String>,
    pub examples: Vec<String>,
    /// Other surface forms of the key; not shown to models.
    #[serde(default)]
    pub synonyms: Vec<String>,
}

/// A type's attribute keys in stored order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyTable {
    pub product_type: NodeId,
    pub rows: Vec<KeyRow>,
}

/// Current key table of a type, Brand first when present.
pub fn key_table(graph: &Graph, product_type: NodeId) -> KeyTable {
    let mut rows: Vec<KeyRow> = graph
        .children(product_type, EdgeKind::HasKey)
        .filter_map(|k| graph.node(k))
        .map(|n| KeyRow {
            key_id: n.id,
            name: n.name.clone(),
            description: n.description.clone(),
            examples: n.examples.clone(),
            synonyms: n.synonyms.clone(),
        })
        .collect();
    if let Some(pos) = rows.iter().position(|r| normalize(&r.name) == "brand") {
        let brand = rows.remove(pos);
        rows.insert(0, brand);
    }
    KeyTable { product_type, rows }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Modality {
    Text,
    Image,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueAssertion {
    pub product: NodeId,
    pub key: NodeId,
    pub raw_value: String,
    pub evidence_modality: Modality,
}

/// Which implementation fills an agent role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Rule,
    Llm,
}

impl FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rule" | "rules" => Ok(BackendKind::Rule),
            "llm" => Ok(BackendKind::Llm),
            other => Err(format!("unknown backend {other:?} (expected rule or llm)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RoleBackends {
    pub kgd: BackendKind,
    pub types: BackendKind,
    pub keys: BackendKind,
    pub values: BackendKind,
}

/// Named model assignments per agent role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    #[default]
    Minimal,
    Balanced,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PresetModels {
    pub kgd: &'static str,
    pub types: &'static str,
    pub keys: &'static str,
    pub values: &'static str,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Minimal, Preset::Balanced, Preset::Full];

    pub fn models(self) -> PresetModels {
        match self {
            Preset::Minimal => PresetModels {
                kgd: "Qwen3-30B-A3B-Instruct-2507",
                types: "Qwen3-4B-Instruct-2507",
                keys: "Qwen3-30B-A3B-Instruct-2507",
                values: "Qwen3-VL-8B",
            },
            Preset::Balanced => PresetModels {
                kgd: "Qwen3-30B-A3B-Instruct-2507",
                types: "Qwen3-4B-Instruct-2507",
                keys: "Qwen3-30B-A3B-Instruct-2507",
                values: "Qwen3-VL-32B",
            },
            Preset::Full => PresetModels {
                kgd: "Qwen3-Next-80B-A3B-Instruct",
                types: "Qwen3-4B-Instruct-2507",
                keys: "Qwen3-235B-A22B-Instruct-2507",
                values: "Qwen3-VL-32B",
            },
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Minimal => "minimal",
            Preset::Balanced => "balanced",
            Preset::Full => "full",
        })
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "minimal" => Ok(Preset::Minimal),
            "balanced" => Ok(Preset::Balanced),
            "full" => Ok(Preset::Full),
            other => Err(format!("unknown preset {other:?} (expected minimal, balanced or full)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub policy: PolicyVariant,
    pub k: usize,
    pub use_retrieval_context: bool,
    pub use_images: bool,
    pub backends: RoleBackends,
    pub preset: Preset,
    /// Listings whose type proposals may be in flight at once.
    pub workers: usize,
    pub params: GenerationParams,
    /// Run key discovery again when a listing's type was merged into an
    /// existing one.
    pub rediscover_keys: bool,
}

impl PipelineConfig {
    /// The decision-engine settings this configuration implies.
    pub fn kgd_config(&self) -> KgdConfig {
        KgdConfig {
            policy: self.policy,
            k: self.k,
            use_retrieval_context: self.use_retrieval_context,
            ..Default::default()
        }
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            policy: PolicyVariant::Basic,
            k: crate::retrieval::DEFAULT_K,
            use_retrieval_context: true,
            use_images: true,
            backends: RoleBackends::default(),
            preset: Preset::default(),
            workers: 4,
            params: GenerationParams::default(),
            rediscover_keys: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionCounts {
    pub proposed: usize,
    pub added: usize,
    pub merged: usize,
    pub replaced: usize,
    pub discarded: usize,
}

impl ActionCounts {
    fn record(&mut self, o: &Outcome) {
        self.proposed += 1;
        match o.action {
            ActionKind::Add => self.added += 1,
            ActionKind::Merge => self.merged += 1,
            ActionKind::Replace => self.replaced += 1,
            ActionKind::Discard => self.discarded += 1,
        }
    }

    fn absorb(&mut self, other: &ActionCounts) {
        self.proposed += other.proposed;
        self.added += other.added;
        self.merged += other.merged;
        self.replaced += other.replaced;
        self.discarded += other.discarded;
    }

    pub fn accepted(&self) -> usize {
        self.proposed - self.discarded
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ListingReport {
    pub listing_id: String,
    pub product: Option<NodeId>,
    /// `None` when the listing ended up without a type.
    pub product_type: Option<NodeId>,
    pub type_action: Option<ActionKind>,
    pub keys_discovered: bool,
    pub types: ActionCounts,
    pub keys: ActionCounts,
    pub values: ActionCounts,
    /// Value assertions that ended as a HasAttribute edge.
    pub assertions: Vec<ValueAssertion>,
    pub errors: Vec<String>,
}

impl ListingReport {
    pub fn assigned(&self) -> bool {
        self.product_type.is_some()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub listings: usize,
    pub assigned: usize,
    pub coverage: f64,
    pub canonical_types: usize,
    /// `1 - types / listings`; absent for an empty corpus.
    pub type_compression: Option<f64>,
    pub types: ActionCounts,
    pub keys: ActionCounts,
    pub values: ActionCounts,
    pub assertions: usize,
    pub stats: GraphStats,
    pub per_listing: Vec<ListingReport>,
}

/// Drives the agents over a corpus and funnels every proposal through one
/// KGD instance in listing order.
pub struct Pipeline {
    kgd: Kgd,
    agents: Agents,
    config: PipelineConfig,
}

impl Pipeline {
    pub fn new(kgd: Kgd, agents: Agents, config: PipelineConfig) -> Self {
        Pipeline { kgd, agents, config }
    }

    pub fn kgd(&self) -> &Kgd {
        &self.kgd
    }

    pub fn graph(&self) -> &Graph {
        self.kgd.graph()
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn agents(&self) -> &Agents {
        &self.agents
    }

    pub fn into_kgd(self) -> Kgd {
        self.kgd
    }

    pub fn process_listing(&mut self, listing: &Listing) -> ListingReport {
        let proposal = self.agents.types.induce(listing);
        self.process_with(listing, proposal)
    }

    /// Process a listing whose type proposal has already been produced.
    fn process_with(&mut self, listing: &Listing, proposal: Result<Option<TypeProposal>, AgentError>) -> ListingReport {
        let mut report = ListingReport {
            listing_id: listing.id.clone(),
            ..Default::default()
        };
        let product = match Candidate::new(NodeKind::Product, &listing.id, &format!("listing:{}", listing.id)) {
            Ok(c) => self.kgd.submit(c.with_description(Some(listing.title.clone()))),
            Err(e) => {
                report.errors.push(format!("product: {e}"));
                return report;
            }
        };
        let Some(product) = product.node.filter(|_| product.action == ActionKind::Add) else {
            report.errors.push(format!("product not created: {}", product.notes.join("; ")));
            return report;
        };
        report.product = Some(product);

        // type
        let proposal = match proposal {
            Ok(Some(p)) => p,
            Ok(None) => return report,
            Err(e) => {
                report.errors.push(format!("type induction: {e}"));
                return report;
            }
        };
        let origin = format!("types:{}@{}", self.agents.types.id(), listing.id);
        let cand = match Candidate::new(NodeKind::ProductType, &proposal.name, &origin) {
            Ok(c) => c
                .with_description(proposal.description.clone())
                .edge_from(product, EdgeKind::OfType),
            Err(e) => {
                report.errors.push(format!("type candidate: {e}"));
                return report;
            }
        };
        let outcome = self.kgd.submit(cand);
        report.types.record(&outcome);
        report.type_action = Some(outcome.action);
        let Some(ty) = outcome.node.filter(|&t| self.graph().has_edge(product, EdgeKind::OfType, t)) else {
            return report;
        };
        report.product_type = Some(ty);
        let type_node = self.graph().node(ty).expect("type exists");
        let type_name = type_node.name.clone();
        let type_desc = type_node.description.clone().unwrap_or_default();

        // keys, only for types this listing introduced
        if outcome.action == ActionKind::Add || self.config.rediscover_keys {
            report.keys_discovered = true;
            match self.agents.keys.discover(&type_name, &type_desc, listing) {
                Ok(rows) => {
                    let origin = format!("keys:{}@{}", self.agents.keys.id(), listing.id);
                    for row in rows {
                        match Candidate::new(NodeKind::AttributeKey, &row.name, &origin) {
                            Ok(c) => {
                                let c = c
                                    .with_description(row.description)
                                    .with_examples(row.examples)
                                    .edge_from(ty, EdgeKind::HasKey);
                                let o = self.kgd.submit(c);
                                report.keys.record(&o);
                            }
                            Err(e) => report.errors.push(format!("key candidate: {e}")),
                        }
                    }
                }
                Err(e) => report.errors.push(format!("key discovery: {e}")),
            }
        }

        // values
        let table = key_table(self.graph(), ty);
        if table.rows.is_empty() {
            return report;
        }
        let use_images = self.config.use_images;
        let pairs = match self.agents.values.extract(listing, &type_name, &type_desc, &table, use_images) {
            Ok(p) => p,
            Err(e) => {
                report.errors.push(format!("value extraction: {e}"));
                return report;
            }
        };
        let modality = if use_images && !listing.image_refs.is_empty() {
            Modality::Mixed
        } else {
            Modality::Text
        };
        let origin = format!("values:{}@{}", self.agents.values.id(), listing.id);
        for (key, raw) in pairs {
            let cand = match Candidate::new(NodeKind::Value, &raw, &origin) {
                Ok(c) => c
                    .edge_from(key, EdgeKind::HasValue)
                    .edge_from(product, EdgeKind::HasAttribute),
                Err(e) => {
                    report.errors.push(format!("value candidate: {e}"));
                    continue;
                }
            };
            let o = self.kgd.submit(cand);
            report.values.record(&o);
            if let Some(v) = o.node {
                if self.graph().has_edge(product, EdgeKind::HasAttribute, v) {
                    report.assertions.push(ValueAssertion {
                        product,
                        key: self.graph().value_key(v).unwrap_or(key),
                        raw_value: raw,
                        evidence_modality: modality,
                    });
                }
            }
        }
        report
    }

    /// Process a corpus in order. Type proposals for up to `workers`
    /// listings are generated concurrently; everything that touches the
    /// graph happens one listing at a time in corpus order.
    pub fn run(&mut self, corpus: &[Listing]) -> PipelineReport {
        let window = self.config.workers.max(1);
        let exec = if window > 1 { Execution::Parallel } else { Execution::Sequential };
        let mut per_listing = Vec::with_capacity(corpus.len());
        for chunk in corpus.chunks(window) {
            let inducer = self.agents.types.clone();
            let proposals = map_slice(chunk, exec, |l| inducer.induce(l));
            for (listing, proposal) in chunk.iter().zip(proposals) {
                per_listing.push(self.process_with(listing, proposal));
            }
        }
        self.summarize(per_listing)
    }

    fn summarize(&self, per_listing: Vec<ListingReport>) -> PipelineReport {
        let g = self.graph();
        let listings = per_listing.len();
        let assigned = per_listing.iter().filter(|r| r.assigned()).count();
        let canonical_types = g.nodes_of_kind(NodeKind::ProductType).count();
        let mut r = PipelineReport {
            listings,
            assigned,
            coverage: if listings == 0 { 0.0 } else { assigned as f64 / listings as f64 },
            canonical_types,
            type_compression: compression(listings as u64, canonical_types as u64).ok(),
            stats: g.stats(),
            ..Default::default()
        };
        for l in &per_listing {
            r.types.absorb(&l.types);
            r.keys.absorb(&l.keys);
            r.values.absorb(&l.values);
            r.assertions += l.assertions.len();
        }
        r.per_listing = per_listing;
        r
    }
}

/// Map each canonical type to the listing ids typed by it.
pub fn products_by_type(graph: &Graph) -> BTreeMap<NodeId, Vec<String>> {
    let mut out: BTreeMap<NodeId, Vec<String>> = BTreeMap::new();
    for p in graph.nodes_of_kind(NodeKind::Product) {
        for t in graph.children(p.id, EdgeKind::OfType) {
            out.entry(t).or_default().push(p.name.clone());
        }
    }
    out
}

/// The graph's asserted facts as (key name, value name) pairs per product,
/// ready for edge-level scoring. Every product appears, even without facts.
pub fn graph_edge_set(graph: &Graph) -> EdgeSet {
    let mut out = EdgeSet::new();
    for p in graph.nodes_of_kind(NodeKind::Product) {
        let pairs = out.entry(p.name.clone()).or_default();
        for v in graph.children(p.id, EdgeKind::HasAttribute) {
            let (Some(value), Some(key)) = (graph.node(v), graph.value_key(v).and_then(|k| graph.node(k))) else {
                continue;
            };
            pairs.insert((key.name.clone(), value.name.clone()));
        }
    }
    out
}
