use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use pkgraph::kgd::{DecisionBackend, Kgd, LlmDecisionBackend, RuleBackend};
use pkgraph::pipeline::chat::{ChatBackend, HttpChatClient};
use pkgraph::pipeline::{
    graph_edge_set, read_corpus, Agents, BackendKind, LlmKeyDiscoverer, LlmTypeInducer, LlmValueExtractor, Pipeline,
    PipelineReport, RuleKeyDiscoverer, RuleTypeInducer, RuleValueExtractor,
};
use pkgraph::prompt;
use pkgraph::retrieval::{EmbeddingProvider, FallbackEmbedder, RemoteEmbedder};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::{Settings, DEFAULT_EMBED_DIM};
use crate::{write_json, Failure};

pub const GRAPH_FILE: &str = "graph.json";
pub const REPORT_FILE: &str = "report.json";
pub const EDGES_FILE: &str = "edges.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct BuildOutputs {
    pub graph: PathBuf,
    pub report: PathBuf,
    pub edges: PathBuf,
    pub manifest: PathBuf,
}

#[derive(Debug)]
pub struct BuildResult {
    pub report: PipelineReport,
    pub outputs: BuildOutputs,
    pub manifest: serde_json::Value,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Per role, the chat client it talks to, or `None` for the rule backend.
fn chat_client(settings: &Settings, role: &str, kind: BackendKind, preset_model: &str) -> Result<Option<Arc<dyn ChatBackend>>, Failure> {
    if kind == BackendKind::Rule {
        return Ok(None);
    }
    let endpoint = settings.llm.endpoint.clone().ok_or_else(|| {
        Failure::usage(format!(
            "the {role} role uses the llm backend but no endpoint is configured (set LLM_ENDPOINT or [llm].endpoint)"
        ))
    })?;
    let model = settings.llm.model.clone().unwrap_or_else(|| preset_model.to_string());
    let client = HttpChatClient::new(endpoint, model, settings.llm.api_key.clone())
        .map_err(|e| Failure::usage(format!("chat client: {e}")))?;
    Ok(Some(Arc::new(client)))
}

fn embedder(settings: &Settings) -> Result<Arc<dyn EmbeddingProvider>, Failure> {
    match &settings.embed.endpoint {
        None => Ok(Arc::new(FallbackEmbedder)),
        Some(endpoint) => {
            let model = settings
                .embed
                .model
                .clone()
                .unwrap_or_else(|| "Qwen/Qwen3-Embedding-0.6B".into());
            let dim = settings.embed.dimension.unwrap_or(DEFAULT_EMBED_DIM);
            let e = RemoteEmbedder::new(endpoint.clone(), model, settings.embed.api_key.clone(), dim)
                .map_err(|e| Failure::usage(format!("embedding client: {e}")))?;
            Ok(Arc::new(e))
        }
    }
}

/// Assemble the engine and agents the settings ask for.
pub fn make_pipeline(settings: &Settings) -> Result<Pipeline, Failure> {
    let cfg = &settings.pipeline;
    let models = cfg.preset.models();
    let params = cfg.params;

    let kgd_backend: Arc<dyn DecisionBackend> = match chat_client(settings, "kgd", cfg.backends.kgd, models.kgd)? {
        Some(c) => Arc::new(LlmDecisionBackend::new(c, params)),
        None => Arc::new(RuleBackend::default()),
    };
    let types: Arc<dyn pkgraph::pipeline::TypeInducer> =
        match chat_client(settings, "types", cfg.backends.types, models.types)? {
            Some(client) => Arc::new(LlmTypeInducer { client, params }),
            None => Arc::new(RuleTypeInducer),
        };
    let keys: Arc<dyn pkgraph::pipeline::KeyDiscoverer> =
        match chat_client(settings, "keys", cfg.backends.keys, models.keys)? {
            Some(client) => Arc::new(LlmKeyDiscoverer { client, params }),
            None => Arc::new(RuleKeyDiscoverer),
        };
    let values: Arc<dyn pkgraph::pipeline::ValueExtractor> =
        match chat_client(settings, "values", cfg.backends.values, models.values)? {
            Some(client) => Arc::new(LlmValueExtractor { client, params }),
            None => Arc::new(RuleValueExtractor),
        };
    let kgd = Kgd::new(embedder(settings)?, kgd_backend, cfg.kgd_config());
    Ok(Pipeline::new(kgd, Agents { types, keys, values }, cfg.clone()))
}

pub fn prompt_digests() -> BTreeMap<&'static str, String> {
    prompt::ALL.iter().map(|t| (t.name, sha256_hex(t.text.as_bytes()))).collect()
}

/// Read the corpus, build the graph and write the snapshot, run report,
/// predicted facts and manifest into the output directory.
pub fn cmd_build(corpus: &Path, settings: &Settings) -> Result<BuildResult, Failure> {
    let started = now();
    let bytes = match fs::read(corpus) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Failure::usage(format!("corpus not found: {}", corpus.display())))
        }
        Err(e) => return Err(Failure::usage(format!("cannot read corpus {}: {e}", corpus.display()))),
    };
    let listings = read_corpus(BufReader::new(bytes.as_slice()))
        .map_err(|e| Failure::usage(format!("{}: {e}", corpus.display())))?;

    let mut pipeline = make_pipeline(settings)?;
    let report = pipeline.run(&listings);
    let agents = pipeline.agents().clone();
    let kgd = pipeline.into_kgd();

    let out = &settings.out;
    fs::create_dir_all(out).map_err(|e| Failure::domain(format!("cannot create {}: {e}", out.display())))?;
    let outputs = BuildOutputs {
        graph: out.join(GRAPH_FILE),
        report: out.join(REPORT_FILE),
        edges: out.join(EDGES_FILE),
        manifest: out.join(MANIFEST_FILE),
    };
    let write = |path: &Path, data: &[u8]| {
        fs::write(path, data).map_err(|e| Failure::domain(format!("cannot write {}: {e}", path.display())))
    };
    write(&outputs.graph, &kgd.graph().to_snapshot_bytes())?;
    write_json(&outputs.report, &report)?;
    let mut edges = Vec::new();
    pkgraph::eval::io::write_edge_set(&graph_edge_set(kgd.graph()), &mut edges).expect("in-memory write");
    write(&outputs.edges, &edges)?;

    let manifest = json!({
        "tool": format!("pkgraph {}", env!("CARGO_PKG_VERSION")),
        "config": settings,
        "credentials": {
            "llm_api_key_set": settings.llm.api_key.is_some(),
            "embed_api_key_set": settings.embed.api_key.is_some(),
        },
        "corpus": {
            "path": corpus,
            "sha256": sha256_hex(&bytes),
            "listings": listings.len(),
        },
        "prompts": prompt_digests(),
        "backends": {
            "kgd": kgd.backend_id(),
            "types": agents.types.id(),
            "keys": agents.keys.id(),
            "values": agents.values.id(),
            "embedder": embedder(settings)?.id(),
        },
        "outputs": outputs,
        "summary": {
            "listings": report.listings,
            "assigned": report.assigned,
            "canonical_types": report.canonical_types,
            "type_compression": report.type_compression,
            "assertions": report.assertions,
        },
        "started_at": started,
        "finished_at": now(),
    });
    write_json(&outputs.manifest, &manifest)?;
    Ok(BuildResult {
        report,
        outputs,
        manifest,
    })
}
