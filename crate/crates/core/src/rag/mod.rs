//! Retrieval for generation prompts: chunk stores, contrastive pair mining,
//! a trainable projection over frozen embeddings, and prompt assembly.

mod augment;
mod infonce;
mod mining;
mod prompt;
mod retriever;
mod store;

use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::EmbedError;

pub use crate::judge::{accuracy_level, Accuracy};
pub use augment::RagPrompter;
pub use infonce::{info_nce_from_sims, info_nce_loss, Denominator, SimGrad};
pub use mining::{
    generation_messages, mine_pairs, ContrastivePair, Evidence, MiningConfig, MiningReport, MiningSkip, Polarity,
};
pub use prompt::{assemble_prompt, PromptConfig, DEFAULT_BUDGET_CHARS, DEFAULT_K_EXAMPLE, DEFAULT_K_KNOWLEDGE};
pub use retriever::{retrieve, train_retriever, RetrieverConfig, RetrieverIndex, RetrieverMeta, RetrieverModel};
pub use store::{chunk_document, embedder_fingerprint, example_chunks, ChunkStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChunkKind {
    Example,
    Knowledge,
}

impl std::fmt::Display for ChunkKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ChunkKind::Example => "example",
            ChunkKind::Knowledge => "knowledge",
        })
    }
}

impl std::str::FromStr for ChunkKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "example" => Ok(ChunkKind::Example),
            "knowledge" => Ok(ChunkKind::Knowledge),
            _ => Err(format!("unknown chunk kind `{s}` (expected example|knowledge)")),
        }
    }
}

/// A retrievable document unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocChunk {
    pub id: String,
    pub kind: ChunkKind,
    pub text: String,
    /// Where the text came from, e.g. `docs/fsm.md#2` or `rtl/alu.v:10-42`.
    pub source: String,
}

#[derive(Debug, Error)]
pub enum RagError {
    #[error("no positive pairs to train on")]
    NoPositives,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("unknown chunk id `{0}`")]
    UnknownChunk(String),
    #[error("no embedding for problem `{0}`")]
    UnknownProblem(String),
    #[error("chunk `{0}` has empty text")]
    EmptyChunk(String),
    #[error("retriever was trained on base embedder `{model}` but the store uses `{store}`")]
    BaseMismatch { model: String, store: String },
    #[error("bad model or store file: {0}")]
    Format(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Io(#[from] io::Error),
}
