use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::infonce::{info_nce_loss, project, Denominator};
use super::mining::{ContrastivePair, Polarity};
use super::{ChunkStore, DocChunk, RagError};
use crate::embedding::{dot, embed, Embedder, EmbeddingVector};
use crate::linalg::{identity, Adam};
use crate::util::{rng_for, write_atomic};

const MAGIC: &[u8; 8] = b"VCRETRV1";
const VERSION: u32 = 1;

fn default_epochs() -> usize {
    3
}
fn default_lr() -> f64 {
    1e-5
}
fn default_tau() -> f64 {
    0.05
}
fn default_batch() -> usize {
    16
}
fn default_min_negatives() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetrieverConfig {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
    /// Problems with fewer mined negatives borrow other positives in the batch.
    #[serde(default = "default_min_negatives")]
    pub min_negatives: usize,
    #[serde(default)]
    pub denominator: Denominator,
}

impl Default for RetrieverConfig {
    fn default() -> Self {
        RetrieverConfig {
            epochs: default_epochs(),
            lr: default_lr(),
            tau: default_tau(),
            batch_size: default_batch(),
            seed: 0,
            min_negatives: default_min_negatives(),
            denominator: Denominator::Standard,
        }
    }
}

impl RetrieverConfig {
    pub fn validate(&self) -> Result<(), RagError> {
        if !(self.tau > 0.0) {
            return Err(RagError::Config("tau must be positive".into()));
        }
        if !(self.lr > 0.0) {
            return Err(RagError::Config("lr must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(RagError::Config("batch_size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrieverMeta {
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    pub batch_size: usize,
    pub min_negatives: usize,
    pub n_examples: usize,
    /// Examples skipped for lack of any negative.
    pub n_skipped: usize,
    /// Mean loss per epoch.
    pub loss_curve: Vec<f64>,
}

/// A `dim × dim` projection applied to frozen base embeddings; similarity is
/// the cosine of the re-normalized projections.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrieverModel {
    pub dim: usize,
    /// Row-major.
    pub projection: Vec<f64>,
    pub tau: f64,
    pub denominator: Denominator,
    /// Fingerprint of the base embedder.
    pub base: String,
    pub meta: Option<RetrieverMeta>,
}

impl RetrieverModel {
    pub fn identity(dim: usize, tau: f64, base: impl Into<String>) -> RetrieverModel {
        RetrieverModel {
            dim,
            projection: identity(dim),
            tau,
            denominator: Denominator::Standard,
            base: base.into(),
            meta: None,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.projection == identity(self.dim)
    }

    /// Projected, unit-norm vector. The identity projection returns the
    /// input unchanged, so untrained retrieval is base retrieval.
    pub fn project(&self, x: &[f64]) -> EmbeddingVector {
        if self.is_identity() {
            return x.to_vec();
        }
        project(&self.projection, self.dim, x).0
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut b = Vec::with_capacity(64 + self.projection.len() * 8);
        b.extend_from_slice(MAGIC);
        b.extend_from_slice(&VERSION.to_le_bytes());
        b.extend_from_slice(&(self.dim as u32).to_le_bytes());
        b.extend_from_slice(&self.tau.to_le_bytes());
        b.push(match self.denominator {
            Denominator::Standard => 0,
            Denominator::NegativesOnly => 1,
        });
        b.extend_from_slice(&(self.base.len() as u32).to_le_bytes());
        b.extend_from_slice(self.base.as_bytes());
        for x in &self.projection {
            b.extend_from_slice(&x.to_le_bytes());
        }
        let meta = serde_json::to_vec(&self.meta).expect("meta serializes");
        b.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        b.extend_from_slice(&meta);
        b
    }

    pub fn from_bytes(b: &[u8]) -> Result<RetrieverModel, RagError> {
        let bad = |m: &str| RagError::Format(m.to_string());
        let mut pos = 0usize;
        let mut take = |n: usize| -> Result<&[u8], RagError> {
            let s = b.get(pos..pos + n).ok_or_else(|| bad("truncated retriever file"))?;
            pos += n;
            Ok(s)
        };
        if take(8)? != MAGIC {
            return Err(bad("not a retriever model file"));
        }
        let u32_at = |s: &[u8]| u32::from_le_bytes(s.try_into().unwrap());
        let version = u32_at(take(4)?);
        if version != VERSION {
            return Err(RagError::Format(format!("unsupported retriever version {version}")));
        }
        let dim = u32_at(take(4)?) as usize;
        let tau = f64::from_le_bytes(take(8)?.try_into().unwrap());
        let denominator = match take(1)?[0] {
            0 => Denominator::Standard,
            1 => Denominator::NegativesOnly,
            _ => return Err(bad("bad denominator flag")),
        };
        let blen = u32_at(take(4)?) as usize;
        let base = String::from_utf8(take(blen)?.to_vec()).map_err(|_| bad("base fingerprint is not UTF-8"))?;
        let projection = take(dim * dim * 8)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let mlen = u32_at(take(4)?) as usize;
        let meta = serde_json::from_slice(take(mlen)?).map_err(|e| RagError::Format(format!("meta: {e}")))?;
        if take(1).is_ok() {
            return Err(bad("trailing bytes in retriever file"));
        }
        Ok(RetrieverModel {
            dim,
            projection,
            tau,
            denominator,
            base,
            meta,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), RagError> {
        write_atomic(path, &self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<RetrieverModel, RagError> {
        Self::from_bytes(&fs::read(path)?)
    }
}

struct Example {
    query: usize,
    positive: usize,
    negatives: Vec<usize>,
}

/// Contrastive training of the projection, starting from identity.
///
/// `queries` maps problem ids to their unit-norm base embeddings. Each
/// positive pair is one example whose negatives are the problem's mined
/// negatives, topped up from other positives in the same batch when fewer
/// than `cfg.min_negatives`. Examples left without any negative are skipped.
pub fn train_retriever(
    pairs: &[ContrastivePair],
    queries: &BTreeMap<String, EmbeddingVector>,
    store: &ChunkStore,
    cfg: &RetrieverConfig,
) -> Result<RetrieverModel, RagError> {
    cfg.validate()?;
    let d = store.dim;
    let index: HashMap<&str, usize> = store
        .chunks()
        .iter()
        .enumerate()
        .map(|(i, c)| (c.id.as_str(), i))
        .collect();
    let mut qids: Vec<&str> = Vec::new();
    let mut qpos: HashMap<&str, usize> = HashMap::new();
    let mut mined_neg: HashMap<&str, Vec<usize>> = HashMap::new();
    let mut positives: Vec<(&str, usize)> = Vec::new();
    for p in pairs {
        let c = *index
            .get(p.chunk_id.as_str())
            .ok_or_else(|| RagError::UnknownChunk(p.chunk_id.clone()))?;
        let q = queries
            .get(&p.problem_id)
            .ok_or_else(|| RagError::UnknownProblem(p.problem_id.clone()))?;
        if q.len() != d {
            return Err(RagError::DimMismatch {
                expected: d,
                got: q.len(),
            });
        }
        if !qpos.contains_key(p.problem_id.as_str()) {
            qpos.insert(p.problem_id.as_str(), qids.len());
            qids.push(p.problem_id.as_str());
        }
        match p.polarity {
            Polarity::Positive => positives.push((p.problem_id.as_str(), c)),
            Polarity::Negative => {
                let v = mined_neg.entry(p.problem_id.as_str()).or_default();
                if !v.contains(&c) {
                    v.push(c);
                }
            }
        }
    }
    if positives.is_empty() {
        return Err(RagError::NoPositives);
    }
    let examples: Vec<Example> = positives
        .iter()
        .map(|(pid, c)| Example {
            query: qpos[pid],
            positive: *c,
            negatives: mined_neg
                .get(pid)
                .map_or_else(Vec::new, |v| v.iter().copied().filter(|n| n != c).collect()),
        })
        .collect();
    let qvecs: Vec<&EmbeddingVector> = qids.iter().map(|id| &queries[*id]).collect();
    let cvecs = store.embeddings();

    let mut w = identity(d);
    let mut adam = Adam::new(d * d, cfg.lr);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut loss_curve = Vec::with_capacity(cfg.epochs);
    let mut skipped = 0usize;
    for epoch in 0..cfg.epochs {
        order.sort_unstable();
        order.shuffle(&mut rng_for(cfg.seed, "rag-train", &epoch.to_string()));
        let mut epoch_loss = 0.0;
        let mut epoch_n = 0usize;
        skipped = 0;
        for batch in order.chunks(cfg.batch_size) {
            let mut grad = vec![0.0; d * d];
            let mut used = 0usize;
            for &ei in batch {
                let ex = &examples[ei];
                let mut negs = ex.negatives.clone();
                if negs.len() < cfg.min_negatives {
                    for &oi in batch {
                        if negs.len() >= cfg.min_negatives {
                            break;
                        }
                        let o = examples[oi].positive;
                        if examples[oi].query != ex.query && o != ex.positive && !negs.contains(&o) {
                            negs.push(o);
                        }
                    }
                }
                if negs.is_empty() {
                    skipped += 1;
                    continue;
                }
                let nrefs: Vec<&[f64]> = negs.iter().map(|&n| cvecs[n].as_slice()).collect();
                let (loss, g) = info_nce_loss(
                    &w,
                    d,
                    qvecs[ex.query],
                    &cvecs[ex.positive],
                    &nrefs,
                    cfg.tau,
                    cfg.denominator,
                );
                epoch_loss += loss;
                epoch_n += 1;
                used += 1;
                for (a, b) in grad.iter_mut().zip(&g) {
                    *a += b;
                }
            }
            if used == 0 {
                continue;
            }
            let scale = 1.0 / used as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            adam.step(&mut w, &grad);
        }
        let mean = if epoch_n > 0 {
            epoch_loss / epoch_n as f64
        } else {
            f64::NAN
        };
        log::debug!("retriever epoch {epoch}: loss {mean:.6}");
        loss_curve.push(mean);
    }
    if skipped > 0 {
        log::warn!("{skipped} training examples had no negatives and were skipped");
    }
    Ok(RetrieverModel {
        dim: d,
        projection: w,
        tau: cfg.tau,
        denominator: cfg.denominator,
        base: store.embedder.clone(),
        meta: Some(RetrieverMeta {
            epochs: cfg.epochs,
            lr: cfg.lr,
            seed: cfg.seed,
            batch_size: cfg.batch_size,
            min_negatives: cfg.min_negatives,
            n_examples: examples.len(),
            n_skipped: skipped,
            loss_curve,
        }),
    })
}

/// A store with every chunk projected once, for repeated queries.
pub struct RetrieverIndex<'a> {
    model: &'a RetrieverModel,
    store: &'a ChunkStore,
    projected: Vec<EmbeddingVector>,
}

impl<'a> RetrieverIndex<'a> {
    pub fn new(model: &'a RetrieverModel, store: &'a ChunkStore) -> Result<RetrieverIndex<'a>, RagError> {
        if !store.is_empty() && model.dim != store.dim {
            return Err(RagError::DimMismatch {
                expected: model.dim,
                got: store.dim,
            });
        }
        if model.base != store.embedder {
            return Err(RagError::BaseMismatch {
                model: model.base.clone(),
                store: store.embedder.clone(),
            });
        }
        let projected = store.embeddings().iter().map(|e| model.project(e)).collect();
        Ok(RetrieverIndex {
            model,
            store,
            projected,
        })
    }

    /// Top-`k` chunk indices for a unit-norm base query vector, by
    /// descending cosine, ties by ascending chunk id.
    pub fn top_k_vec(&self, query: &[f64], k: usize) -> Result<Vec<(usize, f64)>, RagError> {
        if k == 0 || self.projected.is_empty() {
            return Ok(Vec::new());
        }
        if query.len() != self.model.dim {
            return Err(RagError::DimMismatch {
                expected: self.model.dim,
                got: query.len(),
            });
        }
        let q = self.model.project(query);
        let chunks = self.store.chunks();
        let mut scored: Vec<(usize, f64)> = self
            .projected
            .iter()
            .enumerate()
            .map(|(i, v)| (i, dot(&q, v).clamp(-1.0, 1.0)))
            .collect();
        let cmp =
            |a: &(usize, f64), b: &(usize, f64)| b.1.total_cmp(&a.1).then_with(|| chunks[a.0].id.cmp(&chunks[b.0].id));
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, cmp);
            scored.truncate(k);
        }
        scored.sort_by(cmp);
        Ok(scored)
    }

    pub fn retrieve_vec(&self, query: &[f64], k: usize) -> Result<Vec<(DocChunk, f64)>, RagError> {
        Ok(self
            .top_k_vec(query, k)?
            .into_iter()
            .map(|(i, s)| (self.store.chunks()[i].clone(), s))
            .collect())
    }

    pub fn retrieve(&self, embedder: &dyn Embedder, query: &str, k: usize) -> Result<Vec<(DocChunk, f64)>, RagError> {
        if k == 0 {
            return Ok(Vec::new());
        }
        let q = embed(&[query.to_string()], embedder, 1)?.remove(0);
        self.retrieve_vec(&q, k)
    }
}

/// One-shot top-`k` retrieval of `query` from `store`.
pub fn retrieve(
    model: &RetrieverModel,
    store: &ChunkStore,
    embedder: &dyn Embedder,
    query: &str,
    k: usize,
) -> Result<Vec<(DocChunk, f64)>, RagError> {
    RetrieverIndex::new(model, store)?.retrieve(embedder, query, k)
}
