//! Code quality scorer: LLM labelling, an MLP regression head on frozen
//! embeddings, and threshold filtering.

use std::io::Read;
use std::path::Path;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::VerilogModuleChunk;
use crate::gateway::{ChatRequest, GatewayError, LlmGateway, Message};
use crate::linalg::Adam;
use crate::util::rng;

pub const DEFAULT_THRESHOLD: f64 = 6.5;
pub const DEFAULT_HIDDEN: usize = 256;
const MAGIC: &[u8; 8] = b"VCSCORER";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("need at least 2 labelled samples, got {0}")]
    TooFewSamples(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("score {0} outside [0, 10]")]
    ScoreOutOfRange(f64),
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreSource {
    Llm,
    Model,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSample {
    pub chunk_id: String,
    pub score: f64,
    pub source: ScoreSource,
}

/// A chunk whose LLM reply contained no score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedScore {
    pub chunk_id: String,
    pub replies: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LlmScoreRun {
    pub samples: Vec<ScoredSample>,
    pub dropped: Vec<DroppedScore>,
}

fn number_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[-+]?(?:\d+(?:\.\d+)?|\.\d+)").unwrap())
}

/// First decimal number in `reply`, clamped to [0, 10].
pub fn parse_score(reply: &str) -> Option<f64> {
    let m = number_re().find(reply)?;
    let v: f64 = m.as_str().parse().ok()?;
    v.is_finite().then(|| v.clamp(0.0, 10.0))
}

pub fn scoring_prompt(code: &str) -> String {
    format!(
        "You are reviewing Verilog code for use as training material.\n\
         Rate the module below on a scale from 0 to 10, judging readability, \
         scalability, adherence to coding standards, efficiency and robustness.\n\
         Reply with the score first.\n\n\
         ```verilog\n{code}\n```\n"
    )
}

const RETRY_NUDGE: &str = "Reply with a single number between 0 and 10.";

fn score_one(
    chunk: &VerilogModuleChunk,
    gateway: &dyn LlmGateway,
    temperature: f64,
    top_p: f64,
) -> Result<Result<ScoredSample, DroppedScore>, GatewayError> {
    let mut messages = vec![Message::user(scoring_prompt(&chunk.text))];
    let mut replies: Vec<String> = Vec::new();
    for attempt in 0..2 {
        if attempt == 1 {
            messages.push(Message {
                role: "assistant".into(),
                content: replies[0].clone(),
            });
            messages.push(Message::user(RETRY_NUDGE));
        }
        let req = ChatRequest::new("score", messages.clone()).with_sampling(temperature, top_p);
        let reply = gateway.complete(&req)?;
        if let Some(score) = parse_score(&reply) {
            return Ok(Ok(ScoredSample {
                chunk_id: chunk.id.clone(),
                score,
                source: ScoreSource::Llm,
            }));
        }
        replies.push(reply);
    }
    Ok(Err(DroppedScore {
        chunk_id: chunk.id.clone(),
        replies,
    }))
}

/// One LLM score per chunk. Unparseable replies get one follow-up turn and
/// are then dropped and reported.
pub fn request_llm_scores(
    chunks: &[VerilogModuleChunk],
    gateway: &dyn LlmGateway,
    temperature: f64,
    top_p: f64,
) -> Result<LlmScoreRun, GatewayError> {
    let results: Vec<_> = chunks
        .par_iter()
        .map(|c| score_one(c, gateway, temperature, top_p))
        .collect::<Result<_, _>>()?;
    let mut run = LlmScoreRun::default();
    for r in results {
        match r {
            Ok(s) => run.samples.push(s),
            Err(d) => run.dropped.push(d),
        }
    }
    Ok(run)
}

fn default_epochs() -> usize {
    50
}
fn default_lr() -> f64 {
    1e-3
}
fn default_batch() -> usize {
    32
}
fn default_hidden() -> usize {
    DEFAULT_HIDDEN
}
fn default_val_fraction() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerConfig {
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_val_fraction")]
    pub val_fraction: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        ScorerConfig {
            hidden: DEFAULT_HIDDEN,
            epochs: default_epochs(),
            lr: default_lr(),
            batch_size: default_batch(),
            val_fraction: default_val_fraction(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    pub batch_size: usize,
    pub n_train: usize,
    pub n_val: usize,
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub best_epoch: usize,
    pub degenerate: bool,
}

/// One-hidden-layer MLP `D → H → 1` with ReLU. Parameters are stored flat:
/// `W1 (H×D, row-major) | b1 (H) | w2 (H) | b2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScorerModel {
    pub input_dim: usize,
    pub hidden: usize,
    pub params: Vec<f64>,
    pub meta: TrainMeta,
}

impl ScorerModel {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        ScorerModel {
            input_dim,
            hidden,
            params: vec![0.0; hidden * input_dim + 2 * hidden + 1],
            meta: TrainMeta::default(),
        }
    }

    fn split(&self) -> (&[f64], &[f64], &[f64], f64) {
        let (d, h) = (self.input_dim, self.hidden);
        let (w1, rest) = self.params.split_at(h * d);
        let (b1, rest) = rest.split_at(h);
        let (w2, rest) = rest.split_at(h);
        (w1, b1, w2, rest[0])
    }

    pub fn w1_mut(&mut self) -> &mut [f64] {
        let n = self.hidden * self.input_dim;
        &mut self.params[..n]
    }

    pub fn b1_mut(&mut self) -> &mut [f64] {
        let (a, h) = (self.hidden * self.input_dim, self.hidden);
        &mut self.params[a..a + h]
    }

    pub fn w2_mut(&mut self) -> &mut [f64] {
        let (a, h) = (self.hidden * self.input_dim + self.hidden, self.hidden);
        &mut self.params[a..a + h]
    }

    pub fn b2_mut(&mut self) -> &mut f64 {
        self.params.last_mut().expect("non-empty")
    }

    fn hidden_act(&self, e: &[f64]) -> Vec<f64> {
        let (w1, b1, _, _) = self.split();
        w1.chunks_exact(self.input_dim)
            .zip(b1)
            .map(|(row, b)| (row.iter().zip(e).map(|(w, x)| w * x).sum::<f64>() + b).max(0.0))
            .collect()
    }

    /// Unclamped network output.
    pub fn raw_output(&self, e: &[f64]) -> f64 {
        let (_, _, w2, b2) = self.split();
        let h = self.hidden_act(e);
        h.iter().zip(w2).map(|(a, b)| a * b).sum::<f64>() + b2
    }

    pub fn predict(&self, e: &[f64]) -> Result<f64, ScorerError> {
        if e.len() != self.input_dim {
            return Err(ScorerError::DimMismatch {
                expected: self.input_dim,
                got: e.len(),
            });
        }
        Ok(self.raw_output(e).clamp(0.0, 10.0))
    }

    /// Mean squared error over `(xs, ys)` and its gradient w.r.t. `params`.
    pub fn loss_and_grad(&self, xs: &[&[f64]], ys: &[f64]) -> (f64, Vec<f64>) {
        let (d, hn) = (self.input_dim, self.hidden);
        let (_, _, w2, _) = self.split();
        let mut grad = vec![0.0; self.params.len()];
        let n = xs.len() as f64;
        let mut loss = 0.0;
        let (gw1, rest) = grad.split_at_mut(hn * d);
        let (gb1, rest) = rest.split_at_mut(hn);
        let (gw2, gb2) = rest.split_at_mut(hn);
        for (x, &y) in xs.iter().zip(ys) {
            let h = self.hidden_act(x);
            let out = h.iter().zip(w2).map(|(a, b)| a * b).sum::<f64>() + self.split().3;
            let err = out - y;
            loss += err * err / n;
            let dy = 2.0 * err / n;
            gb2[0] += dy;
            for j in 0..hn {
                gw2[j] += dy * h[j];
                if h[j] > 0.0 {
                    let dh = dy * w2[j];
                    gb1[j] += dh;
                    for (g, xi) in gw1[j * d..(j + 1) * d].iter_mut().zip(x.iter()) {
                        *g += dh * xi;
                    }
                }
            }
        }
        (loss, grad)
    }

    fn mse(&self, xs: &[&[f64]], ys: &[f64]) -> f64 {
        if xs.is_empty() {
            return 0.0;
        }
        xs.iter()
            .zip(ys)
            .map(|(x, y)| (self.raw_output(x) - y).powi(2))
            .sum::<f64>()
            / xs.len() as f64
    }

    pub fn save(&self, path: &Path) -> Result<(), ScorerError> {
        let mut buf = Vec::with_capacity(self.params.len() * 8 + 64);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.input_dim as u32).to_le_bytes());
        buf.extend_from_slice(&(self.hidden as u32).to_le_bytes());
        for p in &self.params {
            buf.extend_from_slice(&p.to_le_bytes());
        }
        let meta = serde_json::to_vec(&self.meta).expect("meta serializes");
        buf.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        buf.extend_from_slice(&meta);
        crate::util::write_atomic(path, &buf)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ScorerError> {
        let mut f = std::fs::File::open(path)?;
        let mut buf = Vec::new();
        f.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self, ScorerError> {
        let bad = |m: &str| ScorerError::Format(m.to_string());
        let mut r = buf;
        let mut take = |n: usize| -> Result<&[u8], ScorerError> {
            if r.len() < n {
                return Err(bad("truncated"));
            }
            let (a, b) = r.split_at(n);
            r = b;
            Ok(a)
        };
        if take(8)? != MAGIC {
            return Err(bad("bad magic"));
        }
        let u32_at = |b: &[u8]| u32::from_le_bytes(b.try_into().unwrap());
        let version = u32_at(take(4)?);
        if version != FORMAT_VERSION {
            return Err(ScorerError::Format(format!("unsupported version {version}")));
        }
        let d = u32_at(take(4)?) as usize;
        let h = u32_at(take(4)?) as usize;
        let n = h * d + 2 * h + 1;
        let params = take(n * 8)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let mlen = u32_at(take(4)?) as usize;
        let meta = serde_json::from_slice(take(mlen)?).map_err(|e| ScorerError::Format(e.to_string()))?;
        Ok(ScorerModel {
            input_dim: d,
            hidden: h,
            params,
            meta,
        })
    }
}

/// Trains the head with MSE and Adam on a seeded 90/10 split and returns
/// the parameters from the epoch with the lowest validation loss.
///
/// When every label is identical the result is a constant predictor.
/// With fewer than 10 samples the validation set is the training set.
pub fn train_scorer(labeled: &[(Vec<f64>, f64)], cfg: &ScorerConfig) -> Result<ScorerModel, ScorerError> {
    if labeled.len() < 2 {
        return Err(ScorerError::TooFewSamples(labeled.len()));
    }
    let d = labeled[0].0.len();
    for (e, y) in labeled {
        if e.len() != d {
            return Err(ScorerError::DimMismatch {
                expected: d,
                got: e.len(),
            });
        }
        if !(0.0..=10.0).contains(y) {
            return Err(ScorerError::ScoreOutOfRange(*y));
        }
    }
    let mut meta = TrainMeta {
        epochs: cfg.epochs,
        lr: cfg.lr,
        seed: cfg.seed,
        batch_size: cfg.batch_size,
        ..Default::default()
    };

    let (lo, hi) = labeled
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, y)| {
            (lo.min(*y), hi.max(*y))
        });
    if hi - lo < 1e-12 {
        log::warn!(
            "all {} labels equal {lo}; returning a constant predictor",
            labeled.len()
        );
        let mut m = ScorerModel::zeros(d, cfg.hidden);
        *m.b2_mut() = lo;
        meta.degenerate = true;
        meta.n_train = labeled.len();
        m.meta = meta;
        return Ok(m);
    }

    let mut r = rng(cfg.seed);
    let mut order: Vec<usize> = (0..labeled.len()).collect();
    order.shuffle(&mut r);
    let n_val = (labeled.len() as f64 * cfg.val_fraction).floor() as usize;
    let (val_idx, train_idx) = if n_val == 0 {
        (order.clone(), order.clone())
    } else {
        let (v, t) = order.split_at(n_val);
        (v.to_vec(), t.to_vec())
    };
    meta.n_train = train_idx.len();
    meta.n_val = val_idx.len();
    let xs = |idx: &[usize]| -> Vec<&[f64]> { idx.iter().map(|&i| labeled[i].0.as_slice()).collect() };
    let ys = |idx: &[usize]| -> Vec<f64> { idx.iter().map(|&i| labeled[i].1).collect() };
    let (train_x, train_y) = (xs(&train_idx), ys(&train_idx));
    let (val_x, val_y) = (xs(&val_idx), ys(&val_idx));

    let mut model = ScorerModel::zeros(d, cfg.hidden);
    let a1 = (6.0 / d as f64).sqrt();
    model.w1_mut().iter_mut().for_each(|w| *w = r.random_range(-a1..a1));
    let a2 = (6.0 / cfg.hidden as f64).sqrt();
    model
        .w2_mut()
        .iter_mut()
        .for_each(|w| *w = r.random_range(-a2..a2) * 0.1);
    *model.b2_mut() = train_y.iter().sum::<f64>() / train_y.len() as f64;

    let mut opt = Adam::new(model.params.len(), cfg.lr);
    let mut best = (f64::INFINITY, model.params.clone(), 0);
    let mut perm: Vec<usize> = (0..train_x.len()).collect();
    let bs = cfg.batch_size.max(1);
    for epoch in 1..=cfg.epochs {
        perm.shuffle(&mut r);
        for batch in perm.chunks(bs) {
            let bx: Vec<&[f64]> = batch.iter().map(|&i| train_x[i]).collect();
            let by: Vec<f64> = batch.iter().map(|&i| train_y[i]).collect();
            let (_, g) = model.loss_and_grad(&bx, &by);
            opt.step(&mut model.params, &g);
        }
        let tl = model.mse(&train_x, &train_y);
        let vl = model.mse(&val_x, &val_y);
        meta.train_loss.push(tl);
        meta.val_loss.push(vl);
        log::debug!("scorer epoch {epoch}: train {tl:.5} val {vl:.5}");
        if vl < best.0 {
            best = (vl, model.params.clone(), epoch);
        }
    }
    model.params = best.1;
    meta.best_epoch = best.2;
    model.meta = meta;
    Ok(model)
}

/// Scores every embedding with the model, in parallel.
pub fn score_all(model: &ScorerModel, items: &[(String, Vec<f64>)]) -> Result<Vec<ScoredSample>, ScorerError> {
    items
        .par_iter()
        .map(|(id, e)| {
            Ok(ScoredSample {
                chunk_id: id.clone(),
                score: model.predict(e)?,
                source: ScoreSource::Model,
            })
        })
        .collect()
}

/// Ids of samples scoring strictly above `threshold`, in input order.
pub fn filter_high_quality(samples: &[ScoredSample], threshold: f64) -> Vec<String> {
    samples
        .iter()
        .filter(|s| s.score > threshold)
        .map(|s| s.chunk_id.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::MockGateway;

    #[test]
    fn parser_variants() {
        let cases: &[(&str, Option<f64>)] = &[
            ("7", Some(7.0)),
            ("Score: 8.5/10", Some(8.5)),
            ("8.5 out of 10", Some(8.5)),
            ("I'd give it a 6.", Some(6.0)),
            ("Rating: 9/10. Clean code.", Some(9.0)),
            ("**Score:** 4.25", Some(4.25)),
            ("score = 3", Some(3.0)),
            ("  10  ", Some(10.0)),
            ("0", Some(0.0)),
            ("12", Some(10.0)),
            ("-2", Some(0.0)),
            (".5", Some(0.5)),
            ("Score:\n\n7.0\n", Some(7.0)),
            ("The module is decent. 6.5", Some(6.5)),
            ("7.5 - readable but lacks reset", Some(7.5)),
            ("Overall: 5 (readability 6, robustness 4)", Some(5.0)),
            ("I rate this 8", Some(8.0)),
            ("score: 100", Some(10.0)),
            ("1e3", Some(1.0)),
            ("Final score -> 2.75.", Some(2.75)),
            ("[7]", Some(7.0)),
            ("{\"score\": 9}", Some(9.0)),
            ("Score: seven", None),
            ("", None),
            ("No score available.", None),
            ("N/A", None),
            ("excellent!", None),
            ("3.14159", Some(3.14159)),
            ("+6", Some(6.0)),
            ("about 7-8", Some(7.0)),
        ];
        assert_eq!(cases.len(), 30);
        for (text, want) in cases {
            assert_eq!(parse_score(text), *want, "reply {text:?}");
        }
    }

    fn chunk(id: &str) -> VerilogModuleChunk {
        VerilogModuleChunk {
            id: id.into(),
            source: "x.v".into(),
            module_name: "m".into(),
            text: format!("module {id}; endmodule"),
            line_start: 1,
            line_end: 1,
        }
    }

    #[test]
    fn mock_scores_and_drops() {
        let mut table = std::collections::BTreeMap::new();
        table.insert("score".to_string(), crate::gateway::Replies::One("7".into()));
        let g = MockGateway::new(crate::gateway::MockConfig {
            table,
            ..Default::default()
        })
        .unwrap();
        let run = request_llm_scores(&[chunk("a"), chunk("b")], &g, 0.8, 0.95).unwrap();
        assert_eq!(run.samples.len(), 2);
        assert_eq!(run.samples[0].score, 7.0);
        assert_eq!(run.samples[1].chunk_id, "b");

        let g = MockGateway::from_rules(
            0,
            vec![crate::gateway::MockRule {
                tag: "score".into(),
                contains: None,
                replies: vec!["no idea".into()],
                select: Default::default(),
            }],
        )
        .unwrap();
        let run = request_llm_scores(&[chunk("a")], &g, 0.8, 0.95).unwrap();
        assert!(run.samples.is_empty());
        assert_eq!(run.dropped.len(), 1);
        assert_eq!(run.dropped[0].replies.len(), 2);
    }

    #[test]
    fn filter_is_strict_and_ordered() {
        let s = |id: &str, v| ScoredSample {
            chunk_id: id.into(),
            score: v,
            source: ScoreSource::Model,
        };
        let kept = filter_high_quality(&[s("a", 6.5), s("b", 6.51), s("c", 10.0)], 6.5);
        assert_eq!(kept, ["b", "c"]);
        assert!(filter_high_quality(&[], 6.5).is_empty());
    }

    #[test]
    fn hand_computed_forward() {
        // W1 = [[1, 2], [-1, 0.5]], b1 = [0.5, -0.25], w2 = [2, 3], b2 = 1
        let mut m = ScorerModel::zeros(2, 2);
        m.w1_mut().copy_from_slice(&[1.0, 2.0, -1.0, 0.5]);
        m.b1_mut().copy_from_slice(&[0.5, -0.25]);
        m.w2_mut().copy_from_slice(&[2.0, 3.0]);
        *m.b2_mut() = 1.0;
        // e = [0.3, -0.1]: h = relu([0.6, -0.6]) = [0.6, 0]; y = 1.2 + 1 = 2.2
        assert!((m.predict(&[0.3, -0.1]).unwrap() - 2.2).abs() < 1e-9);
        // e = [-0.5, 0.4]: h = relu([0.8, 0.45]) = [0.8, 0.45]; y = 1.6 + 1.35 + 1 = 3.95
        assert!((m.predict(&[-0.5, 0.4]).unwrap() - 3.95).abs() < 1e-9);
        // e = [4, 4]: h = [12.5, 0] -> y = 26, clamped
        assert_eq!(m.predict(&[4.0, 4.0]).unwrap(), 10.0);
        *m.b2_mut() = -50.0;
        assert_eq!(m.predict(&[4.0, 4.0]).unwrap(), 0.0);
        assert!(matches!(m.predict(&[1.0]), Err(ScorerError::DimMismatch { .. })));
    }

    #[test]
    fn zero_weights_predict_bias() {
        let mut m = ScorerModel::zeros(4, 3);
        *m.b2_mut() = 4.2;
        assert_eq!(m.predict(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 4.2);
        *m.b2_mut() = 12.0;
        assert_eq!(m.predict(&[0.0; 4]).unwrap(), 10.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut r = rng(7);
        let mut m = ScorerModel::zeros(3, 4);
        m.params.iter_mut().for_each(|p| *p = r.random_range(-1.0..1.0));
        let xs: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..3).map(|_| r.random_range(-1.0..1.0)).collect())
            .collect();
        let ys: Vec<f64> = (0..5).map(|_| r.random_range(0.0..10.0)).collect();
        let xr: Vec<&[f64]> = xs.iter().map(|v| v.as_slice()).collect();
        let (_, g) = m.loss_and_grad(&xr, &ys);
        let eps = 1e-4;
        for i in 0..m.params.len() {
            let mut p = m.clone();
            p.params[i] += eps;
            let (lp, _) = p.loss_and_grad(&xr, &ys);
            p.params[i] -= 2.0 * eps;
            let (lm, _) = p.loss_and_grad(&xr, &ys);
            let num = (lp - lm) / (2.0 * eps);
            let denom = num.abs().max(g[i].abs()).max(1e-8);
            assert!(
                (num - g[i]).abs() / denom < 1e-4 || (num - g[i]).abs() < 1e-9,
                "param {i}: {num} vs {}",
                g[i]
            );
        }
    }

    #[test]
    fn degenerate_labels() {
        let data: Vec<_> = (0..5).map(|i| (vec![i as f64, 1.0], 6.0)).collect();
        let m = train_scorer(&data, &ScorerConfig::default()).unwrap();
        assert!(m.meta.degenerate);
        for (e, _) in &data {
            assert!((m.predict(e).unwrap() - 6.0).abs() < 1e-6);
        }
    }

    #[test]
    fn two_samples_loss_decreases() {
        let data = vec![(vec![1.0, 0.0, 0.0], 0.0), (vec![0.0, 1.0, 0.0], 10.0)];
        let cfg = ScorerConfig {
            epochs: 10,
            hidden: 16,
            ..Default::default()
        };
        let m = train_scorer(&data, &cfg).unwrap();
        let l = &m.meta.train_loss;
        assert_eq!(l.len(), 10);
        assert!(l.windows(2).all(|w| w[1] < w[0]), "{l:?}");
    }

    #[test]
    fn training_is_reproducible_and_roundtrips() {
        let mut r = rng(3);
        let data: Vec<_> = (0..40)
            .map(|_| {
                let e: Vec<f64> = (0..8).map(|_| r.random_range(-1.0..1.0)).collect();
                let y = (5.0 + 3.0 * e[0]).clamp(0.0, 10.0);
                (e, y)
            })
            .collect();
        let cfg = ScorerConfig {
            epochs: 5,
            hidden: 8,
            seed: 11,
            ..Default::default()
        };
        let a = train_scorer(&data, &cfg).unwrap();
        let b = train_scorer(&data, &cfg).unwrap();
        assert_eq!(a, b);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        a.save(&p).unwrap();
        assert_eq!(ScorerModel::load(&p).unwrap(), a);
        std::fs::write(&p, b"nope").unwrap();
        assert!(ScorerModel::load(&p).is_err());
    }
}
