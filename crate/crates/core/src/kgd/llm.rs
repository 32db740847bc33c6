use std::sync::Arc;

use super::{BackendError, DecisionBackend, DecisionContext};
use crate::pipeline::chat::{chat, ChatBackend, GenerationParams};
use crate::prompt::render_kgd;

/// Decision backend that asks a chat model. Text only.
pub struct LlmDecisionBackend {
    client: Arc<dyn ChatBackend>,
    params: GenerationParams,
}

impl LlmDecisionBackend {
    pub fn new(client: Arc<dyn ChatBackend>, params: GenerationParams) -> Self {
        LlmDecisionBackend { client, params }
    }
}

impl DecisionBackend for LlmDecisionBackend {
    fn id(&self) -> String {
        format!("llm:{}", self.client.id())
    }

    fn propose(&self, ctx: &DecisionContext) -> Result<String, BackendError> {
        let prompt = render_kgd(ctx.policy, &ctx.candidate, &ctx.neighbors);
        let text = chat(self.client.as_ref(), &prompt, &[], &self.params)
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        if text.trim().is_empty() {
            return Err(BackendError::Empty);
        }
        Ok(text)
    }
}
