use std::collections::BTreeSet;

use super::{BackendError, DecisionBackend, DecisionContext, EditAction, Neighbor, PolicyVariant};
use crate::graph::NodeKind;
use crate::normalize::{normalize, singular_key};

/// Cosine similarity above which the basic rule policy treats the top hit
/// as the same concept.
pub const DEFAULT_MERGE_THRESHOLD: f32 = 0.92;

#[derive(Debug, Clone)]
pub struct RuleConfig {
    pub merge_threshold: f32,
    /// Names shorter than this (in characters, after normalization) are dropped.
    pub min_len: usize,
    /// Normalized names that are never worth a node.
    pub stopwords: BTreeSet<String>,
}

impl Default for RuleConfig {
    fn default() -> Self {
        let stop = [
            "n/a", "na", "none", "null", "nil", "unknown", "other", "others", "misc", "item", "items",
            "product", "products", "accessory", "high quality", "best", "premium", "-", "?",
        ];
        RuleConfig {
            merge_threshold: DEFAULT_MERGE_THRESHOLD,
            min_len: 2,
            stopwords: stop.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Deterministic decision backend that needs no model.
#[derive(Debug, Clone, Default)]
pub struct RuleBackend {
    pub config: RuleConfig,
}

impl RuleBackend {
    pub fn new(config: RuleConfig) -> Self {
        RuleBackend { config }
    }

    pub fn choose(&self, ctx: &DecisionContext) -> EditAction {
        let cand = &ctx.candidate;
        let norm = normalize(&cand.name);
        if norm.chars().count() < self.config.min_len || self.config.stopwords.contains(&norm) {
            return match ctx.policy {
                PolicyVariant::NoDiscard => EditAction::Add,
                _ => EditAction::Discard,
            };
        }

        // Exact match on a name or synonym always merges, whatever the key.
        if let Some(n) = ctx.neighbors.iter().find(|n| forms(n).any(|f| normalize(f) == norm)) {
            return EditAction::Merge(n.node_id);
        }
        if ctx.policy == PolicyVariant::Strict {
            return EditAction::Add;
        }

        // Fuzzy matches must not move a value under a different key.
        let key = cand.intended_key();
        let same_key = |n: &Neighbor| cand.kind != NodeKind::Value || n.key == key;

        let sing = singular_key(&cand.name);
        if let Some(n) = ctx
            .neighbors
            .iter()
            .filter(|n| same_key(n))
            .find(|n| forms(n).any(|f| singular_key(f) == sing))
        {
            return EditAction::Merge(n.node_id);
        }
        if let Some(top) = ctx.neighbors.first() {
            if top.score >= self.config.merge_threshold && same_key(top) {
                return EditAction::Merge(top.node_id);
            }
        }
        EditAction::Add
    }
}

fn forms(n: &Neighbor) -> impl Iterator<Item = &str> {
    std::iter::once(n.name.as_str()).chain(n.synonyms.iter().map(String::as_str))
}

impl DecisionBackend for RuleBackend {
    fn id(&self) -> String {
        format!("rule@{}", self.config.merge_threshold)
    }

    fn propose(&self, ctx: &DecisionContext) -> Result<String, BackendError> {
        Ok(self.choose(ctx).to_string())
    }
}
