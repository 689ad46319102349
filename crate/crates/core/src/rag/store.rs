use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ChunkKind, DocChunk, RagError};
use crate::corpus::{chunk_id, VerilogModuleChunk};
use crate::embedding::{embed, Embedder, EmbedderConfig, EmbeddingVector};
use crate::util::{read_jsonl, sha256_hex, write_atomic, write_jsonl};

const EMB_MAGIC: &[u8; 8] = b"VCEMBED1";
const CHUNKS_FILE: &str = "chunks.jsonl";
const EMB_FILE: &str = "embeddings.bin";
const META_FILE: &str = "store.json";

/// Identifies the base embedding space: provider, model and dimension.
pub fn embedder_fingerprint(cfg: &EmbedderConfig) -> String {
    let key = serde_json::json!({
        "provider": cfg.provider,
        "model": cfg.model,
        "dim": cfg.dim,
    });
    sha256_hex(key.to_string().as_bytes())[..16].to_string()
}

/// Splits a document into chunks of whole paragraphs of at most
/// `max_chars` characters. A paragraph longer than the limit stays whole.
/// Markdown headings always start a new chunk.
pub fn chunk_document(source: &str, text: &str, max_chars: usize) -> Vec<DocChunk> {
    let mut paras: Vec<String> = Vec::new();
    let mut cur: Vec<&str> = Vec::new();
    for line in text.lines() {
        let blank = line.trim().is_empty();
        if blank || line.trim_start().starts_with('#') {
            if !cur.is_empty() {
                paras.push(cur.join("\n"));
                cur.clear();
            }
            if blank {
                continue;
            }
        }
        cur.push(line.trim_end());
    }
    if !cur.is_empty() {
        paras.push(cur.join("\n"));
    }

    let mut groups: Vec<String> = Vec::new();
    let mut buf = String::new();
    for p in paras {
        let heading = p.trim_start().starts_with('#');
        if !buf.is_empty() && (heading || buf.len() + 2 + p.len() > max_chars) {
            groups.push(std::mem::take(&mut buf));
        }
        if !buf.is_empty() {
            buf.push_str("\n\n");
        }
        buf.push_str(&p);
    }
    if !buf.trim().is_empty() {
        groups.push(buf);
    }
    groups
        .into_iter()
        .enumerate()
        .map(|(i, text)| DocChunk {
            id: chunk_id(&text),
            kind: ChunkKind::Knowledge,
            source: format!("{source}#{}", i + 1),
            text,
        })
        .collect()
}

/// Example chunks from ingested modules.
pub fn example_chunks(modules: &[VerilogModuleChunk]) -> Vec<DocChunk> {
    modules
        .iter()
        .map(|m| DocChunk {
            id: m.id.clone(),
            kind: ChunkKind::Example,
            text: m.text.clone(),
            source: format!("{}:{}-{}", m.source, m.line_start, m.line_end),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct StoreMeta {
    kind: ChunkKind,
    dim: usize,
    count: usize,
    embedder: String,
}

/// Chunks of one kind with their unit-norm base embeddings. Immutable once
/// built; safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkStore {
    pub kind: ChunkKind,
    pub dim: usize,
    /// Fingerprint of the base embedder, see [`embedder_fingerprint`].
    pub embedder: String,
    chunks: Vec<DocChunk>,
    embeddings: Vec<EmbeddingVector>,
}

impl ChunkStore {
    /// Embeds `chunks`. Duplicate ids keep their first occurrence.
    pub fn build(
        kind: ChunkKind,
        chunks: Vec<DocChunk>,
        embedder: &dyn Embedder,
        cfg: &EmbedderConfig,
    ) -> Result<ChunkStore, RagError> {
        let mut seen = BTreeSet::new();
        let chunks: Vec<DocChunk> = chunks.into_iter().filter(|c| seen.insert(c.id.clone())).collect();
        for c in &chunks {
            if c.kind != kind {
                return Err(RagError::Config(format!(
                    "chunk `{}` is {} but the store holds {kind}",
                    c.id, c.kind
                )));
            }
        }
        let texts: Vec<String> = chunks.iter().map(|c| c.text.clone()).collect();
        let embeddings = embed(&texts, embedder, cfg.batch_size)?;
        let mut s = Self::from_parts(kind, embedder_fingerprint(cfg), chunks, embeddings)?;
        s.dim = embedder.dim();
        Ok(s)
    }

    /// Assembles a store from precomputed embeddings.
    pub fn from_parts(
        kind: ChunkKind,
        embedder: String,
        chunks: Vec<DocChunk>,
        embeddings: Vec<EmbeddingVector>,
    ) -> Result<ChunkStore, RagError> {
        if chunks.len() != embeddings.len() {
            return Err(RagError::Format(format!(
                "{} chunks but {} embeddings",
                chunks.len(),
                embeddings.len()
            )));
        }
        let dim = embeddings.first().map_or(0, Vec::len);
        for (c, e) in chunks.iter().zip(&embeddings) {
            if c.text.trim().is_empty() {
                return Err(RagError::EmptyChunk(c.id.clone()));
            }
            if e.len() != dim {
                return Err(RagError::DimMismatch {
                    expected: dim,
                    got: e.len(),
                });
            }
        }
        Ok(ChunkStore {
            kind,
            dim,
            embedder,
            chunks,
            embeddings,
        })
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    pub fn chunks(&self) -> &[DocChunk] {
        &self.chunks
    }

    pub fn embeddings(&self) -> &[EmbeddingVector] {
        &self.embeddings
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.chunks.iter().position(|c| c.id == id)
    }

    /// Writes `chunks.jsonl`, `embeddings.bin` and `store.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), RagError> {
        fs::create_dir_all(dir)?;
        write_jsonl(&dir.join(CHUNKS_FILE), &self.chunks)?;
        let mut buf = Vec::with_capacity(16 + self.len() * self.dim * 8);
        buf.extend_from_slice(EMB_MAGIC);
        buf.extend_from_slice(&(self.len() as u32).to_le_bytes());
        buf.extend_from_slice(&(self.dim as u32).to_le_bytes());
        for e in &self.embeddings {
            for x in e {
                buf.extend_from_slice(&x.to_le_bytes());
            }
        }
        write_atomic(&dir.join(EMB_FILE), &buf)?;
        let meta = StoreMeta {
            kind: self.kind,
            dim: self.dim,
            count: self.len(),
            embedder: self.embedder.clone(),
        };
        let mut json = serde_json::to_string_pretty(&meta).expect("meta serializes");
        json.push('\n');
        write_atomic(&dir.join(META_FILE), json.as_bytes())?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<ChunkStore, RagError> {
        let meta: StoreMeta = serde_json::from_slice(&fs::read(dir.join(META_FILE))?)
            .map_err(|e| RagError::Format(format!("{META_FILE}: {e}")))?;
        let chunks: Vec<DocChunk> = read_jsonl(&dir.join(CHUNKS_FILE))?;
        let bytes = fs::read(dir.join(EMB_FILE))?;
        if bytes.len() < 16 || &bytes[..8] != EMB_MAGIC {
            return Err(RagError::Format(format!("{EMB_FILE}: bad magic")));
        }
        let n = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let d = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        if bytes.len() != 16 + n * d * 8 {
            return Err(RagError::Format(format!("{EMB_FILE}: truncated")));
        }
        if n != meta.count || d != meta.dim || n != chunks.len() {
            return Err(RagError::Format(format!(
                "store counts disagree: meta {}×{}, matrix {n}×{d}, {} chunks",
                meta.count,
                meta.dim,
                chunks.len()
            )));
        }
        let embeddings = bytes[16..]
            .chunks_exact(d.max(1) * 8)
            .take(n)
            .map(|row| {
                row.chunks_exact(8)
                    .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                    .collect()
            })
            .collect();
        if let Some(c) = chunks.iter().find(|c| c.kind != meta.kind) {
            return Err(RagError::Format(format!(
                "chunk `{}` is {} in a {} store",
                c.id, c.kind, meta.kind
            )));
        }
        let mut s = Self::from_parts(meta.kind, meta.embedder, chunks, embeddings)?;
        s.dim = d;
        Ok(s)
    }
}
