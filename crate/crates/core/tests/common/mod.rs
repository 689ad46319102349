#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use vcoder_core::embedding::normalize;
use vcoder_core::rag::{ChunkKind, ChunkStore, ContrastivePair, DocChunk};
use vcoder_core::util::rng;

/// Problems live in one block of coordinates and their positive chunks in
/// another, related by a hidden orthogonal map, so base cosine carries no
/// signal and a learned projection can recover it.
pub struct RotationFixture {
    pub store: ChunkStore,
    pub queries: BTreeMap<String, Vec<f64>>,
    /// Problem id to its positive chunk id.
    pub positive: BTreeMap<String, String>,
    pub train_pairs: Vec<ContrastivePair>,
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
}

const DIM: usize = 64;
const SIG: usize = 24;

fn gauss(r: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.sample::<f64, _>(StandardNormal)).collect()
}

fn orthogonal(r: &mut impl Rng, n: usize) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    while rows.len() < n {
        let mut v = gauss(r, n);
        for u in &rows {
            let d: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= d * b);
        }
        normalize(&mut v);
        rows.push(v);
    }
    rows
}

fn layout(sig_a: Option<&[f64]>, sig_b: Option<&[f64]>, nuisance: &[f64]) -> Vec<f64> {
    let mut v = vec![0.0; DIM];
    if let Some(a) = sig_a {
        v[..SIG].copy_from_slice(a);
    }
    if let Some(b) = sig_b {
        v[SIG..2 * SIG].copy_from_slice(b);
    }
    v[2 * SIG..].copy_from_slice(nuisance);
    normalize(&mut v);
    v
}

pub fn rotation_fixture(
    seed: u64,
    problems: usize,
    chunks: usize,
    n_train: usize,
    negatives: usize,
    nuisance_scale: f64,
) -> RotationFixture {
    let mut r = rng(seed);
    let q = orthogonal(&mut r, SIG);
    let rotate = |s: &[f64]| -> Vec<f64> {
        q.iter()
            .map(|row| row.iter().zip(s).map(|(a, b)| a * b).sum())
            .collect()
    };
    let unit = |r: &mut rand_chacha::ChaCha8Rng, n: usize| {
        let mut v = gauss(r, n);
        normalize(&mut v);
        v
    };
    let mut queries = BTreeMap::new();
    let mut positive = BTreeMap::new();
    let mut docs = Vec::new();
    let mut embs = Vec::new();
    for i in 0..problems {
        let s = unit(&mut r, SIG);
        let n1: Vec<f64> = unit(&mut r, DIM - 2 * SIG).iter().map(|x| x * nuisance_scale).collect();
        let n2: Vec<f64> = unit(&mut r, DIM - 2 * SIG).iter().map(|x| x * nuisance_scale).collect();
        let pid = format!("p{i:04}");
        let cid = format!("c{i:05}");
        queries.insert(pid.clone(), layout(Some(&s), None, &n1));
        embs.push(layout(None, Some(&rotate(&s)), &n2));
        docs.push(cid.clone());
        positive.insert(pid, cid);
    }
    for j in problems..chunks {
        let s = unit(&mut r, SIG);
        let n2: Vec<f64> = unit(&mut r, DIM - 2 * SIG).iter().map(|x| x * nuisance_scale).collect();
        embs.push(layout(None, Some(&rotate(&s)), &n2));
        docs.push(format!("c{j:05}"));
    }
    let chunks_v: Vec<DocChunk> = docs
        .iter()
        .map(|id| DocChunk {
            id: id.clone(),
            kind: ChunkKind::Example,
            text: format!("chunk {id}"),
            source: "fixture".into(),
        })
        .collect();
    let store = ChunkStore::from_parts(ChunkKind::Example, "fixture".into(), chunks_v, embs).unwrap();
    let ids: Vec<String> = queries.keys().cloned().collect();
    let (train_ids, test_ids) = (ids[..n_train].to_vec(), ids[n_train..].to_vec());
    let mut train_pairs = Vec::new();
    for pid in &train_ids {
        let pos = &positive[pid];
        train_pairs.push(ContrastivePair::classify(pid, pos, 1, 2));
        let mut k = 0;
        while k < negatives {
            let j = r.random_range(problems..chunks);
            train_pairs.push(ContrastivePair::classify(pid, &docs[j], 1, 1));
            k += 1;
        }
    }
    RotationFixture {
        store,
        queries,
        positive,
        train_pairs,
        train_ids,
        test_ids,
    }
}
