//! Layered settings: TOML file, then environment, then flags.

use std::path::{Path, PathBuf};

use pkgraph::kgd::PolicyVariant;
use pkgraph::pipeline::{BackendKind, GenerationParams, PipelineConfig, Preset};
use serde::{Deserialize, Serialize};

use crate::args::GlobalArgs;
use crate::Failure;

pub const DEFAULT_OUT: &str = "out";
pub const DEFAULT_SEED: u64 = 7;
pub const DEFAULT_EMBED_DIM: usize = 1024;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointConfig {
    pub endpoint: Option<String>,
    pub model: Option<String>,
    /// Never written back out.
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedConfig {
    pub endpoint: Option<String>,
    pub model: Option<String>,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    pub dimension: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoleOverrides {
    pub kgd: Option<BackendKind>,
    pub types: Option<BackendKind>,
    pub keys: Option<BackendKind>,
    pub values: Option<BackendKind>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationOverrides {
    pub temperature: Option<f64>,
    pub top_p: Option<f64>,
    pub top_k: Option<u32>,
    pub max_new_tokens: Option<u32>,
}

/// The config file as written. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub policy: Option<PolicyVariant>,
    pub k: Option<usize>,
    pub retrieval_context: Option<bool>,
    pub images: Option<bool>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    /// Backend for every role; `[backends]` overrides single roles.
    pub backend: Option<BackendKind>,
    pub preset: Option<Preset>,
    pub rediscover_keys: Option<bool>,
    #[serde(default)]
    pub backends: RoleOverrides,
    #[serde(default)]
    pub generation: GenerationOverrides,
    #[serde(default)]
    pub llm: EndpointConfig,
    #[serde(default)]
    pub embed: EmbedConfig,
}

impl FileConfig {
    pub fn read(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::usage(format!("invalid config {}: {e}", path.display())))
    }
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub config_file: Option<PathBuf>,
    pub pipeline: PipelineConfig,
    pub seed: u64,
    pub out: PathBuf,
    pub llm: EndpointConfig,
    pub embed: EmbedConfig,
}

impl Settings {
    /// Resolve from the process environment.
    pub fn from_process(global: &GlobalArgs) -> Result<Self, Failure> {
        Self::resolve(global, |name| std::env::var(name).ok())
    }

    /// `env` looks up a variable; empty values count as unset.
    pub fn resolve(global: &GlobalArgs, env: impl Fn(&str) -> Option<String>) -> Result<Self, Failure> {
        let file = match &global.config {
            Some(path) => FileConfig::read(path)?,
            None => FileConfig::default(),
        };
        let env = |name: &str| env(name).filter(|v| !v.is_empty());

        let mut pipeline = PipelineConfig::default();
        let mut seed = DEFAULT_SEED;
        let mut out = PathBuf::from(DEFAULT_OUT);

        // file
        if let Some(p) = file.policy {
            pipeline.policy = p;
        }
        if let Some(k) = file.k {
            pipeline.k = k;
        }
        if let Some(b) = file.retrieval_context {
            pipeline.use_retrieval_context = b;
        }
        if let Some(b) = file.images {
            pipeline.use_images = b;
        }
        if let Some(w) = file.workers {
            pipeline.workers = w;
        }
        if let Some(s) = file.seed {
            seed = s;
        }
        if let Some(o) = &file.out {
            out = o.clone();
        }
        if let Some(b) = file.backend {
            set_all(&mut pipeline, b);
        }
        let roles = &mut pipeline.backends;
        for (slot, v) in [
            (&mut roles.kgd, file.backends.kgd),
            (&mut roles.types, file.backends.types),
            (&mut roles.keys, file.backends.keys),
            (&mut roles.values, file.backends.values),
        ] {
            if let Some(v) = v {
                *slot = v;
            }
        }
        if let Some(p) = file.preset {
            pipeline.preset = p;
        }
        if let Some(b) = file.rediscover_keys {
            pipeline.rediscover_keys = b;
        }
        apply_generation(&mut pipeline.params, file.generation);
        let mut llm = file.llm;
        let mut embed = file.embed;

        // environment
        for (slot, var) in [
            (&mut llm.endpoint, "LLM_ENDPOINT"),
            (&mut llm.model, "LLM_MODEL"),
            (&mut llm.api_key, "LLM_API_KEY"),
            (&mut embed.endpoint, "EMBED_ENDPOINT"),
            (&mut embed.model, "EMBED_MODEL"),
            (&mut embed.api_key, "EMBED_API_KEY"),
        ] {
            if let Some(v) = env(var) {
                *slot = Some(v);
            }
        }

        // flags
        if let Some(p) = global.policy {
            pipeline.policy = p;
        }
        if let Some(k) = global.k {
            pipeline.k = k;
        }
        if global.no_retrieval_context {
            pipeline.use_retrieval_context = false;
        }
        if global.no_images {
            pipeline.use_images = false;
        }
        if let Some(w) = global.workers {
            pipeline.workers = w;
        }
        if let Some(s) = global.seed {
            seed = s;
        }
        if let Some(o) = &global.out {
            out = o.clone();
        }
        if let Some(b) = global.backend {
            set_all(&mut pipeline, b);
        }
        if let Some(p) = global.preset {
            pipeline.preset = p;
        }

        if pipeline.k == 0 {
            return Err(Failure::usage("k must be at least 1"));
        }
        if pipeline.workers == 0 {
            return Err(Failure::usage("workers must be at least 1"));
        }
        Ok(Settings {
            config_file: global.config.clone(),
            pipeline,
            seed,
            out,
            llm,
            embed,
        })
    }
}

fn set_all(pipeline: &mut PipelineConfig, b: BackendKind) {
    let r = &mut pipeline.backends;
    r.kgd = b;
    r.types = b;
    r.keys = b;
    r.values = b;
}

fn apply_generation(params: &mut GenerationParams, g: GenerationOverrides) {
    if let Some(v) = g.temperature {
        params.temperature = v;
    }
    if let Some(v) = g.top_p {
        params.top_p = v;
    }
    if let Some(v) = g.top_k {
        params.top_k = v;
    }
    if let Some(v) = g.max_new_tokens {
        params.max_new_tokens = v;
    }
}
