use super::prompt::{assemble_prompt, PromptConfig};
use super::retriever::RetrieverIndex;
use super::RagError;
use crate::embedding::{embed, Embedder};

/// Builds retrieval-augmented prompts from the example and knowledge
/// retrievers; either may be absent.
pub struct RagPrompter<'a> {
    pub embedder: &'a dyn Embedder,
    pub example: Option<RetrieverIndex<'a>>,
    pub knowledge: Option<RetrieverIndex<'a>>,
    pub cfg: PromptConfig,
}

impl RagPrompter<'_> {
    pub fn prompt_for(&self, problem: &str) -> Result<String, RagError> {
        let q = embed(&[problem.to_string()], self.embedder, 1)?.remove(0);
        let examples = match &self.example {
            Some(ix) => ix.retrieve_vec(&q, self.cfg.k_example)?,
            None => Vec::new(),
        };
        let knowledge = match &self.knowledge {
            Some(ix) => ix.retrieve_vec(&q, self.cfg.k_knowledge)?,
            None => Vec::new(),
        };
        Ok(assemble_prompt(problem, &examples, &knowledge, self.cfg.budget_chars))
    }
}
