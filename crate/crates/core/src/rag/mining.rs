use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::prompt::{assemble_prompt, DEFAULT_BUDGET_CHARS};
use super::retriever::{RetrieverIndex, RetrieverModel};
use super::{ChunkKind, ChunkStore, RagError};
use crate::embedding::{embed, Embedder};
use crate::evalkit::{extract_verilog, BenchmarkTask};
use crate::gateway::{ChatRequest, LlmGateway, Message};
use crate::judge::{accuracy_level, JudgeConfig};
use crate::util::sub_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub f_base: u8,
    pub f_with_chunk: u8,
}

/// Whether adding a chunk to the prompt improved the generated design.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContrastivePair {
    pub problem_id: String,
    pub chunk_id: String,
    pub polarity: Polarity,
    pub evidence: Evidence,
}

impl ContrastivePair {
    /// Positive iff the chunk strictly raised F.
    pub fn classify(problem_id: &str, chunk_id: &str, f_base: u8, f_with_chunk: u8) -> ContrastivePair {
        ContrastivePair {
            problem_id: problem_id.into(),
            chunk_id: chunk_id.into(),
            polarity: if f_with_chunk > f_base {
                Polarity::Positive
            } else {
                Polarity::Negative
            },
            evidence: Evidence { f_base, f_with_chunk },
        }
    }
}

fn default_candidates() -> usize {
    10
}
fn default_temperature() -> f64 {
    0.8
}
fn default_top_p() -> f64 {
    0.95
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiningConfig {
    /// Chunks tried per problem, the top ones by base cosine.
    #[serde(default = "default_candidates")]
    pub candidates_per_problem: usize,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_top_p")]
    pub top_p: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub judge: JudgeConfig,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig {
            candidates_per_problem: default_candidates(),
            temperature: default_temperature(),
            top_p: default_top_p(),
            seed: 0,
            judge: JudgeConfig::default(),
        }
    }
}

/// A generation that could not be made. `chunk_id` is absent when the
/// baseline failed, in which case the whole problem is skipped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiningSkip {
    pub problem_id: String,
    pub chunk_id: Option<String>,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MiningReport {
    pub pairs: Vec<ContrastivePair>,
    pub skipped: Vec<MiningSkip>,
}

const SYSTEM: &str = "You are an expert hardware designer. Answer with one complete, synthesizable Verilog module \
inside a ```verilog code block.";

/// Chat messages for generating a design from a prompt.
pub fn generation_messages(prompt: &str) -> Vec<Message> {
    vec![Message::system(SYSTEM), Message::user(prompt)]
}

fn generate_level(
    task: &BenchmarkTask,
    prompt: &str,
    tag: String,
    gateway: &dyn LlmGateway,
    cfg: &MiningConfig,
) -> Result<u8, String> {
    let req = ChatRequest::new(tag, generation_messages(prompt)).with_sampling(cfg.temperature, cfg.top_p);
    let reply = gateway.complete(&req).map_err(|e| e.to_string())?;
    let code = extract_verilog(&reply).unwrap_or(reply);
    let seed = sub_seed(cfg.seed, "mine", &task.id);
    Ok(accuracy_level(&code, &task.judge, &cfg.judge, seed).level)
}

fn mine_one(
    task: &BenchmarkTask,
    candidates: &[(crate::rag::DocChunk, f64)],
    kind: ChunkKind,
    gateway: &dyn LlmGateway,
    cfg: &MiningConfig,
) -> (Vec<ContrastivePair>, Vec<MiningSkip>) {
    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    let base = match generate_level(task, &task.problem, format!("mine:{}:base", task.id), gateway, cfg) {
        Ok(f) => f,
        Err(e) => {
            skipped.push(MiningSkip {
                problem_id: task.id.clone(),
                chunk_id: None,
                error: e,
            });
            return (pairs, skipped);
        }
    };
    for (chunk, score) in candidates {
        let one = [(chunk.clone(), *score)];
        let prompt = match kind {
            ChunkKind::Example => assemble_prompt(&task.problem, &one, &[], DEFAULT_BUDGET_CHARS),
            ChunkKind::Knowledge => assemble_prompt(&task.problem, &[], &one, DEFAULT_BUDGET_CHARS),
        };
        match generate_level(task, &prompt, format!("mine:{}:{}", task.id, chunk.id), gateway, cfg) {
            Ok(f) => pairs.push(ContrastivePair::classify(&task.id, &chunk.id, base, f)),
            Err(e) => skipped.push(MiningSkip {
                problem_id: task.id.clone(),
                chunk_id: Some(chunk.id.clone()),
                error: e,
            }),
        }
    }
    (pairs, skipped)
}

/// For each problem: generate a baseline design and score it with F, then
/// for each of the top candidate chunks by base cosine generate again with
/// the chunk in the prompt and classify the pair by whether F rose. Problems
/// run in parallel; output follows the input order.
pub fn mine_pairs(
    problems: &[BenchmarkTask],
    store: &ChunkStore,
    embedder: &dyn Embedder,
    gateway: &dyn LlmGateway,
    cfg: &MiningConfig,
) -> Result<MiningReport, RagError> {
    let base_model = RetrieverModel::identity(store.dim, 1.0, store.embedder.clone());
    let index = RetrieverIndex::new(&base_model, store)?;
    let texts: Vec<String> = problems.iter().map(|p| p.problem.clone()).collect();
    let queries = embed(&texts, embedder, 32)?;
    let candidates: Vec<_> = queries
        .iter()
        .map(|q| index.retrieve_vec(q, cfg.candidates_per_problem))
        .collect::<Result<_, _>>()?;
    let results: Vec<_> = problems
        .par_iter()
        .zip(candidates.par_iter())
        .map(|(task, cands)| mine_one(task, cands, store.kind, gateway, cfg))
        .collect();
    let mut report = MiningReport::default();
    for (p, s) in results {
        report.pairs.extend(p);
        report.skipped.extend(s);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_is_strict() {
        for b in 0..=2u8 {
            for w in 0..=2u8 {
                let p = ContrastivePair::classify("p", "c", b, w);
                assert_eq!(p.polarity == Polarity::Positive, w > b);
            }
        }
    }
}
