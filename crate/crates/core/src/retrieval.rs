//! Per-kind dense retrieval over canonical node names.
//!
//! Exact brute-force cosine scan. Vectors are unit length, so cosine is the
//! dot product. Results are ordered by score descending, then node id
//! ascending.

use std::collections::{BTreeMap, HashMap};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{self, Execution};
use crate::graph::{NodeId, NodeKind};
use crate::normalize::normalize;

/// Dimension of the built-in hashed n-gram embedder.
pub const FALLBACK_DIM: usize = 256;
/// Seed folded into the FNV-1a offset basis of the n-gram hash.
pub const FALLBACK_SEED: u64 = 0x5EED_0F_C0FFEE;
/// Retrieval depth used by the decision engine unless configured otherwise.
pub const DEFAULT_K: usize = 10;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("embedding provider failed: {0}")]
    Provider(String),
    #[error("embedding for node {node} failed: {source}")]
    ForNode {
        node: NodeId,
        #[source]
        source: Box<EmbedError>,
    },
    #[error("provider returned dimension {got}, expected {expected}")]
    Dimension { got: usize, expected: usize },
    #[error("k must be at least 1")]
    ZeroK,
}

/// Maps text to a fixed-length unit vector. Implementations must be
/// deterministic: the same input always yields the same vector.
pub trait EmbeddingProvider: Send + Sync {
    fn dimension(&self) -> usize;
    fn embed(&self, text: &str) -> Result<Vec<f32>, EmbedError>;
    fn id(&self) -> String;
}

/// Hashed character 3-gram embedder. No external service needed.
#[derive(Debug, Clone, Copy, Default)]
pub struct FallbackEmbedder;

impl EmbeddingProvider for FallbackEmbedder {
    fn dimension(&self) -> usize {
        FALLBACK_DIM
    }

    fn embed(&self, text: &str) -> Result<Vec<f32>, EmbedError> {
        Ok(fallback_embed(text))
    }

    fn id(&self) -> String {
        format!("fallback-3gram-{FALLBACK_DIM}")
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ FALLBACK_SEED;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Count hashed 3-grams of the normalized text into 256 buckets and
/// L2-normalize. Inputs with fewer than three characters map to `e_0`.
pub fn fallback_embed(text: &str) -> Vec<f32> {
    let norm = normalize(text);
    let chars: Vec<char> = norm.chars().collect();
    let mut v = vec![0f32; FALLBACK_DIM];
    if chars.len() < 3 {
        v[0] = 1.0;
        return v;
    }
    let mut buf = [0u8; 12];
    for w in chars.windows(3) {
        let mut len = 0;
        for c in w {
            len += c.encode_utf8(&mut buf[len..]).len();
        }
        let bucket = (fnv1a(&buf[..len]) % FALLBACK_DIM as u64) as usize;
        v[bucket] += 1.0;
    }
    let norm = v.iter().map(|x| x * x).sum::<f32>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

pub fn dot(a: &[f32], b: &[f32]) -> f32 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalHit {
    pub node_id: NodeId,
    pub score: f32,
    pub rank: usize,
}

#[derive(Debug, Clone, Default)]
struct Partition {
    ids: Vec<NodeId>,
    vectors: Vec<Vec<f32>>,
    slot: HashMap<NodeId, usize>,
}

/// Vectors for canonical names, partitioned by node kind.
#[derive(Debug, Clone, Default)]
pub struct VectorIndex {
    parts: BTreeMap<NodeKind, Partition>,
}

impl VectorIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Store (or overwrite) a precomputed vector.
    pub fn upsert_vector(&mut self, kind: NodeKind, node: NodeId, vector: Vec<f32>) {
        let part = self.parts.entry(kind).or_default();
        match part.slot.get(&node) {
            Some(&i) => part.vectors[i] = vector,
            None => {
                part.slot.insert(node, part.ids.len());
                part.ids.push(node);
                part.vectors.push(vector);
            }
        }
    }

    pub fn upsert(
        &mut self,
        provider: &dyn EmbeddingProvider,
        kind: NodeKind,
        node: NodeId,
        name: &str,
    ) -> Result<(), EmbedError> {
        let v = provider.embed(&normalize(name)).map_err(|e| EmbedError::ForNode {
            node,
            source: Box::new(e),
        })?;
        self.upsert_vector(kind, node, v);
        Ok(())
    }

    pub fn len(&self, kind: NodeKind) -> usize {
        self.parts.get(&kind).map_or(0, |p| p.ids.len())
    }

    pub fn is_empty(&self) -> bool {
        self.parts.values().all(|p| p.ids.is_empty())
    }

    pub fn vector(&self, kind: NodeKind, node: NodeId) -> Option<&[f32]> {
        let p = self.parts.get(&kind)?;
        p.slot.get(&node).map(|&i| p.vectors[i].as_slice())
    }

    /// Top-k by cosine against a query vector.
    pub fn search(&self, kind: NodeKind, query: &[f32], k: usize, exec: Execution) -> Vec<RetrievalHit> {
        let Some(part) = self.parts.get(&kind) else {
            return Vec::new();
        };
        if k == 0 || part.ids.is_empty() {
            return Vec::new();
        }
        let scores = exec::map_slice(&part.vectors, exec, |v| dot(v, query));
        let mut order: Vec<usize> = (0..scores.len()).collect();
        let cmp = |a: &usize, b: &usize| {
            scores[*b]
                .total_cmp(&scores[*a])
                .then(part.ids[*a].cmp(&part.ids[*b]))
        };
        if k < order.len() {
            order.select_nth_unstable_by(k - 1, cmp);
            order.truncate(k);
        }
        order.sort_unstable_by(cmp);
        order
            .into_iter()
            .enumerate()
            .map(|(r, i)| RetrievalHit {
                node_id: part.ids[i],
                score: scores[i],
                rank: r + 1,
            })
            .collect()
    }

    /// Embed `query` and return the top-k hits of `kind`.
    pub fn top_k(
        &self,
        provider: &dyn EmbeddingProvider,
        kind: NodeKind,
        query: &str,
        k: usize,
    ) -> Result<Vec<RetrievalHit>, EmbedError> {
        if k == 0 {
            return Err(EmbedError::ZeroK);
        }
        if self.len(kind) == 0 {
            return Ok(Vec::new());
        }
        let q = provider.embed(&normalize(query))?;
        Ok(self.search(kind, &q, k, Execution::Auto))
    }
}

/// Remote provider: POSTs `{"input": [text], "model": model}` and accepts
/// either an OpenAI-style `{"data": [{"embedding": [...]}]}` body or a bare
/// array of vectors. One retry on transport failure.
pub struct RemoteEmbedder {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    dimension: usize,
    client: reqwest::blocking::Client,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum EmbedResponse {
    OpenAi { data: Vec<EmbedDatum> },
    Bare(Vec<Vec<f32>>),
}

#[derive(Deserialize)]
struct EmbedDatum {
    embedding: Vec<f32>,
}

impl RemoteEmbedder {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>, api_key: Option<String>, dimension: usize) -> Result<Self, EmbedError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .map_err(|e| EmbedError::Provider(e.to_string()))?;
        Ok(RemoteEmbedder {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key,
            dimension,
            client,
        })
    }

    /// Reads `EMBED_ENDPOINT`, `EMBED_MODEL` and `EMBED_API_KEY`.
    /// `None` when no endpoint is configured.
    pub fn from_env(dimension: usize) -> Option<Result<Self, EmbedError>> {
        let endpoint = std::env::var("EMBED_ENDPOINT").ok().filter(|s| !s.is_empty())?;
        let model = std::env::var("EMBED_MODEL").unwrap_or_else(|_| "Qwen/Qwen3-Embedding-0.6B".into());
        let key = std::env::var("EMBED_API_KEY").ok().filter(|s| !s.is_empty());
        Some(Self::new(endpoint, model, key, dimension))
    }

    fn request(&self, text: &str) -> Result<Vec<f32>, EmbedError> {
        let body = serde_json::json!({ "input": [text], "model": self.model });
        let mut req = self.client.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| EmbedError::Provider(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(EmbedError::Provider(format!("HTTP {status}")));
        }
        let parsed: EmbedResponse = resp.json().map_err(|e| EmbedError::Provider(e.to_string()))?;
        let mut v = match parsed {
            EmbedResponse::OpenAi { data } => data.into_iter().next().map(|d| d.embedding),
            EmbedResponse::Bare(vs) => vs.into_iter().next(),
        }
        .ok_or_else(|| EmbedError::Provider("empty embedding response".into()))?;
        if v.len() != self.dimension {
            return Err(EmbedError::Dimension {
                got: v.len(),
                expected: self.dimension,
            });
        }
        let norm = v.iter().map(|x| x * x).sum::<f32>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        Ok(v)
    }
}

impl EmbeddingProvider for RemoteEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<Vec<f32>, EmbedError> {
        match self.request(text) {
            Err(EmbedError::Provider(first)) => {
                log::warn!("embedding request failed ({first}), retrying once");
                std::thread::sleep(Duration::from_millis(200));
                self.request(text)
            }
            other => other,
        }
    }

    fn id(&self) -> String {
        format!("remote:{}", self.model)
    }
}
