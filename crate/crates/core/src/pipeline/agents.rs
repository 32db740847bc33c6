//! The three proposal agents, each with a model-backed and a rule-based
//! implementation.

use std::sync::Arc;

use thiserror::Error;

use super::chat::{chat, ChatBackend, ChatError, GenerationParams};
use super::parse::{parse_key_table, parse_type_answer, parse_values, render_key_table, OutputError};
use super::{KeyProposal, KeyTable, Listing};
use crate::graph::NodeId;
use crate::normalize::{normalize, singular_key, title_case};
use crate::prompt::{KEY_DISCOVERY, TYPE_DESCRIPTION, TYPE_SUGGESTION, VALUE_EXTRACTION};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AgentError {
    #[error(transparent)]
    Backend(#[from] ChatError),
    #[error("unusable output after retry: {0}")]
    Output(#[from] OutputError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeProposal {
    pub name: String,
    pub description: Option<String>,
}

pub trait TypeInducer: Send + Sync {
    fn id(&self) -> String;
    /// `Ok(None)` means the agent abstained.
    fn induce(&self, listing: &Listing) -> Result<Option<TypeProposal>, AgentError>;
}

pub trait KeyDiscoverer: Send + Sync {
    fn id(&self) -> String;
    /// Propose a key table for a new type. `exemplar` is the listing that
    /// introduced the type.
    fn discover(&self, type_name: &str, type_description: &str, exemplar: &Listing) -> Result<Vec<KeyProposal>, AgentError>;
}

pub trait ValueExtractor: Send + Sync {
    fn id(&self) -> String;
    /// (key id, raw value) pairs for keys of `table`.
    fn extract(
        &self,
        listing: &Listing,
        type_name: &str,
        type_description: &str,
        table: &KeyTable,
        use_images: bool,
    ) -> Result<Vec<(NodeId, String)>, AgentError>;
}

/// Ask, parse, and ask once more if the first answer did not parse.
fn ask_parsed<T>(
    client: &dyn ChatBackend,
    prompt: &str,
    images: &[String],
    params: &GenerationParams,
    parse: impl Fn(&str) -> Result<T, OutputError>,
) -> Result<T, AgentError> {
    let first = chat(client, prompt, images, params)?;
    match parse(&first) {
        Ok(v) => Ok(v),
        Err(e) => {
            log::debug!("retrying after unparseable answer: {e}");
            let second = chat(client, prompt, images, params)?;
            Ok(parse(&second)?)
        }
    }
}

pub struct LlmTypeInducer {
    pub client: Arc<dyn ChatBackend>,
    pub params: GenerationParams,
}

impl TypeInducer for LlmTypeInducer {
    fn id(&self) -> String {
        format!("llm:{}", self.client.id())
    }

    fn induce(&self, listing: &Listing) -> Result<Option<TypeProposal>, AgentError> {
        let prompt = TYPE_SUGGESTION.render(&[
            ("title", &listing.title),
            ("description", listing.description.as_deref().unwrap_or("")),
            ("specifications", &listing.specs_json()),
        ]);
        let Some(name) = ask_parsed(self.client.as_ref(), &prompt, &[], &self.params, parse_type_answer)? else {
            return Ok(None);
        };
        // The description is a nicety; failing to get one does not lose the type.
        let prompt = TYPE_DESCRIPTION.render(&[("product_type", &name), ("title", &listing.title)]);
        let description = match chat(self.client.as_ref(), &prompt, &[], &self.params) {
            Ok(text) => Some(text.trim().to_string()).filter(|s| !s.is_empty()),
            Err(e) => {
                log::warn!("type description for {name:?} failed: {e}");
                None
            }
        };
        Ok(Some(TypeProposal { name, description }))
    }
}

pub struct LlmKeyDiscoverer {
    pub client: Arc<dyn ChatBackend>,
    pub params: GenerationParams,
}

impl KeyDiscoverer for LlmKeyDiscoverer {
    fn id(&self) -> String {
        format!("llm:{}", self.client.id())
    }

    fn discover(&self, type_name: &str, type_description: &str, _: &Listing) -> Result<Vec<KeyProposal>, AgentError> {
        let prompt = KEY_DISCOVERY.render(&[
            ("product_type", type_name),
            ("product_type_description", type_description),
        ]);
        ask_parsed(self.client.as_ref(), &prompt, &[], &self.params, parse_key_table)
    }
}

pub struct LlmValueExtractor {
    pub client: Arc<dyn ChatBackend>,
    pub params: GenerationParams,
}

impl ValueExtractor for LlmValueExtractor {
    fn id(&self) -> String {
        format!("llm:{}", self.client.id())
    }

    fn extract(
        &self,
        listing: &Listing,
        type_name: &str,
        type_description: &str,
        table: &KeyTable,
        use_images: bool,
    ) -> Result<Vec<(NodeId, String)>, AgentError> {
        let rendered = render_key_table(table);
        let prompt = VALUE_EXTRACTION.render(&[
            ("product_type", type_name),
            ("product_type_description", type_description),
            ("attribute_table", &rendered),
            ("title", &listing.title),
            ("highlights", listing.highlights.as_deref().unwrap_or("")),
            ("description", listing.description.as_deref().unwrap_or("")),
            ("specifications", &listing.specs_json()),
        ]);
        let images: &[String] = if use_images { &listing.image_refs } else { &[] };
        ask_parsed(self.client.as_ref(), &prompt, images, &self.params, |t| parse_values(t, table))
    }
}

/// Specification fields that name the product type rather than an attribute.
pub const TYPE_FIELDS: [&str; 3] = ["category", "product_type", "type"];

fn spec<'a>(listing: &'a Listing, field: &str) -> Option<&'a Vec<String>> {
    listing
        .specifications
        .iter()
        .find(|(k, _)| normalize(k).replace(' ', "_") == field)
        .map(|(_, v)| v)
}

/// Reads the type from the listing's `category` (or `product_type`, `type`)
/// specification and abstains when there is none.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleTypeInducer;

impl TypeInducer for RuleTypeInducer {
    fn id(&self) -> String {
        "rule:spec-category".into()
    }

    fn induce(&self, listing: &Listing) -> Result<Option<TypeProposal>, AgentError> {
        let name = TYPE_FIELDS
            .iter()
            .filter_map(|f| spec(listing, f))
            .flat_map(|vs| vs.first())
            .map(|s| s.trim())
            .find(|s| !s.is_empty() && !s.eq_ignore_ascii_case("none"));
        Ok(name.map(|n| TypeProposal {
            name: n.to_string(),
            description: None,
        }))
    }
}

/// Proposes Brand followed by the exemplar listing's specification fields.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleKeyDiscoverer;

impl KeyDiscoverer for RuleKeyDiscoverer {
    fn id(&self) -> String {
        "rule:spec-fields".into()
    }

    fn discover(&self, _: &str, _: &str, exemplar: &Listing) -> Result<Vec<KeyProposal>, AgentError> {
        let mut out = vec![KeyProposal {
            name: "Brand".into(),
            description: None,
            examples: spec(exemplar, "brand").cloned().unwrap_or_default(),
        }];
        for (field, values) in &exemplar.specifications {
            let norm = normalize(field).replace(['_', '-'], " ");
            let snake = norm.replace(' ', "_");
            if norm == "brand" || TYPE_FIELDS.contains(&snake.as_str()) || norm.is_empty() {
                continue;
            }
            let name = title_case(&norm);
            if out.iter().any(|p| normalize(&p.name) == norm) {
                continue;
            }
            out.push(KeyProposal {
                name,
                description: None,
                examples: values.clone(),
            });
        }
        Ok(out)
    }
}

/// Copies specification values whose field matches a key name or synonym,
/// ignoring case, separators and plural endings.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleValueExtractor;

impl ValueExtractor for RuleValueExtractor {
    fn id(&self) -> String {
        "rule:spec-values".into()
    }

    fn extract(&self, listing: &Listing, _: &str, _: &str, table: &KeyTable, _: bool) -> Result<Vec<(NodeId, String)>, AgentError> {
        let mut out = Vec::new();
        for row in &table.rows {
            let forms: Vec<String> = std::iter::once(&row.name)
                .chain(&row.synonyms)
                .map(|s| singular_key(&s.replace(['_', '-'], " ")))
                .collect();
            for (field, values) in &listing.specifications {
                if forms.contains(&singular_key(&field.replace(['_', '-'], " "))) {
                    for v in values.iter().map(|v| v.trim()).filter(|v| !v.is_empty()) {
                        out.push((row.key_id, v.to_string()));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// One implementation per agent role.
#[derive(Clone)]
pub struct Agents {
    pub types: Arc<dyn TypeInducer>,
    pub keys: Arc<dyn KeyDiscoverer>,
    pub values: Arc<dyn ValueExtractor>,
}

impl Agents {
    pub fn rules() -> Self {
        Agents {
            types: Arc::new(RuleTypeInducer),
            keys: Arc::new(RuleKeyDiscoverer),
            values: Arc::new(RuleValueExtractor),
        }
    }
}
