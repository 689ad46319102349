//! Acceptance gate. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde_json::json;
use vcoder_core::config::{load_config, Overrides, PipelineConfig};
use vcoder_core::embedding::normalize;
use vcoder_core::evalkit::pass_at_k;
use vcoder_core::judge::{accuracy_level, Judge, JudgeConfig};
use vcoder_core::pipeline::run_pipeline;
use vcoder_core::rag::{
    info_nce_from_sims, info_nce_loss, train_retriever, ChunkKind, ChunkStore, Denominator, DocChunk, RetrieverConfig,
    RetrieverIndex, RetrieverModel,
};
use vcoder_core::reference::ReferenceModel;
use vcoder_core::scorer::{filter_high_quality, train_scorer, ScoreSource, ScoredSample, ScorerConfig};
use vcoder_core::synth::{filter_pair, Level, ProblemCodePair, ProblemSpec, VerdictStatus};
use vcoder_core::util::rng;
use vcoder_core::verilog::{eval_combinational, parse_design, BitVector, CircuitKind};

type Outcome = Result<String, String>;

fn within(limit: Duration, t: Instant, detail: String) -> Outcome {
    let el = t.elapsed();
    if el > limit {
        Err(format!("{detail}; took {el:.2?}, limit {limit:?}"))
    } else {
        Ok(format!("{detail}; {el:.2?}"))
    }
}

fn gauss_unit(r: &mut impl Rng, d: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..d).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
    normalize(&mut v);
    v
}

// ---------------------------------------------------------------- 1

fn subsets(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if cur.len() == k {
        f(cur);
        return;
    }
    for i in start..n {
        cur.push(i);
        subsets(n, k, i + 1, cur, f);
        cur.pop();
    }
}

/// Fraction of the C(n, k) draws that contain at least one of the first `c`
/// (correct) samples.
fn enumerated(n: usize, c: usize, k: usize) -> f64 {
    let (mut hit, mut total) = (0u64, 0u64);
    subsets(n, k, 0, &mut Vec::new(), &mut |s| {
        total += 1;
        if s.iter().any(|&i| i < c) {
            hit += 1;
        }
    });
    hit as f64 / total as f64
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let mut cases = 0;
    for n in 1..=10usize {
        for c in 0..=n {
            for k in [1usize, 5] {
                if k > n {
                    continue;
                }
                let got = pass_at_k(n as u64, c as u64, k as u64).map_err(|e| e.to_string())?;
                let want = enumerated(n, c, k);
                if (got - want).abs() > 1e-12 {
                    return Err(format!("n={n} c={c} k={k}: {got} vs enumeration {want}"));
                }
                cases += 1;
            }
        }
    }
    let v = pass_at_k(10, 5, 5).map_err(|e| e.to_string())?;
    if (v - 251.0 / 252.0).abs() > 1e-12 {
        return Err(format!("pass@5(10,5) = {v}, want 251/252"));
    }
    within(
        Duration::from_secs(1),
        t,
        format!("{cases} (n,c,k) cases match enumeration"),
    )
}

// ---------------------------------------------------------------- 2

fn reference(inputs: &[(&str, u32)], outputs: &[(&str, u32, &str)]) -> ReferenceModel {
    serde_json::from_value(json!({
        "inputs": inputs.iter().map(|(n, w)| json!({"name": n, "width": w})).collect::<Vec<_>>(),
        "outputs": outputs.iter().map(|(n, w, e)| json!({"name": n, "width": w, "expr": e})).collect::<Vec<_>>(),
    }))
    .unwrap()
}

fn counter_judge() -> Judge {
    serde_json::from_value(json!({"testbench": {"kind": "vectors", "clock": "clk", "steps": [
        {"apply": {"rst": "1'b1", "en": "1'b0"}, "after": 1, "expect": {"q": "4'h0"}},
        {"apply": {"rst": "1'b0", "en": "1'b1"}, "after": 1, "expect": {"q": "4'h1"}},
        {"apply": {}, "after": 2, "expect": {"q": "4'h3"}},
        {"apply": {"en": "1'b0"}, "after": 1, "expect": {"q": "4'h3"}},
        {"apply": {"rst": "1'b1"}, "after": 1, "expect": {"q": "4'h0"}}
    ]}}))
    .unwrap()
}

fn judges() -> BTreeMap<&'static str, Judge> {
    BTreeMap::from([
        (
            "and",
            Judge::Reference(reference(&[("a", 1), ("b", 1)], &[("y", 1, "a & b")])),
        ),
        (
            "mux",
            Judge::Reference(reference(&[("sel", 1), ("a", 4), ("b", 4)], &[("y", 4, "sel ? b : a")])),
        ),
        (
            "adder",
            Judge::Reference(reference(
                &[("a", 4), ("b", 4)],
                &[("sum", 4, "a + b"), ("cout", 1, "(a + b) >> 4")],
            )),
        ),
        ("counter", counter_judge()),
        (
            "comparator",
            Judge::Reference(reference(
                &[("a", 4), ("b", 4)],
                &[("gt", 1, "a > b"), ("eq", 1, "a == b")],
            )),
        ),
    ])
}

const FV_SUITE: &[(&str, u8, &str)] = &[
    ("and", 0, "module and2(input a, input b, output y);\n  assign y = a & ;\nendmodule\n"),
    ("and", 1, "module and2(input a, input b, output y);\n  assign y = a | b;\nendmodule\n"),
    ("and", 2, "module and2(input a, input b, output y);\n  assign y = a & b;\nendmodule\n"),
    (
        "mux",
        0,
        "module mux2(input sel, input [3:0] a, input [3:0] b, output [3:0] y)\n  assign y = sel ? b : a;\nendmodule\n",
    ),
    (
        "mux",
        1,
        "module mux2(input sel, input [3:0] a, input [3:0] b, output [3:0] y);\n  assign y = sel ? a : b;\nendmodule\n",
    ),
    (
        "mux",
        2,
        "module mux2(input sel, input [3:0] a, input [3:0] b, output reg [3:0] y);\n  always @(*) begin\n    if (sel) y = b;\n    else y = a;\n  end\nendmodule\n",
    ),
    (
        "adder",
        0,
        "module add4(input [3:0] a, input [3:0] b, output [3:0] sum, output cout);\n  assign {cout, sum} = a + b;\n",
    ),
    (
        "adder",
        1,
        "module add4(input [3:0] a, input [3:0] b, output [3:0] sum, output cout);\n  assign sum = a + b;\n  assign cout = 1'b0;\nendmodule\n",
    ),
    (
        "adder",
        2,
        "module add4(input [3:0] a, input [3:0] b, output [3:0] sum, output cout);\n  assign {cout, sum} = a + b;\nendmodule\n",
    ),
    (
        "counter",
        0,
        "module counter4(input clk, input rst, input en, output reg [3:0] q);\n  always @(posedge clk) begin\n    if (rst) q <= 4'd0;\n    else if (en) q <= q + 4'd1;\nendmodule\n",
    ),
    (
        "counter",
        1,
        "module counter4(input clk, input rst, input en, output reg [3:0] q);\n  always @(posedge clk) begin\n    if (rst) q <= 4'd0;\n    else if (en) q <= q + 4'd2;\n  end\nendmodule\n",
    ),
    (
        "counter",
        2,
        "module counter4(input clk, input rst, input en, output reg [3:0] q);\n  always @(posedge clk) begin\n    if (rst) q <= 4'd0;\n    else if (en) q <= q + 4'd1;\n  end\nendmodule\n",
    ),
    (
        "comparator",
        0,
        "module cmp4(input [3:0] a, input [3:0] b, output gt, output eq);\n  assign gt = a > b;\n  assign eq = a === ;\nendmodule\n",
    ),
    (
        "comparator",
        1,
        "module cmp4(input [3:0] a, input [3:0] b, output gt, output eq);\n  assign gt = a >= b;\n  assign eq = a == b;\nendmodule\n",
    ),
    (
        "comparator",
        2,
        "module cmp4(input [3:0] a, input [3:0] b, output gt, output eq);\n  assign gt = a > b;\n  assign eq = a == b;\nendmodule\n",
    ),
];

fn criterion_2() -> Outcome {
    let t = Instant::now();
    let judges = judges();
    let cfg = JudgeConfig::default();
    let mut per_level = [0usize; 3];
    let mut wrong = Vec::new();
    for (i, (task, label, text)) in FV_SUITE.iter().enumerate() {
        per_level[*label as usize] += 1;
        let acc = accuracy_level(text, &judges[task], &cfg, i as u64);
        if acc.level != *label || acc.unverifiable {
            wrong.push(format!(
                "case {i} ({task}) labeled {label}, got {} ({})",
                acc.level, acc.detail
            ));
        }
    }
    if per_level != [5, 5, 5] {
        return Err(format!("suite is unbalanced: {per_level:?}"));
    }
    if !wrong.is_empty() {
        return Err(wrong.join("; "));
    }
    within(Duration::from_secs(5), t, "15/15 labels matched".into())
}

// ---------------------------------------------------------------- 3

struct Fixture {
    name: &'static str,
    inputs: &'static [(&'static str, u32)],
    out_width: u32,
    verilog: &'static str,
    reference: &'static str,
    mutant: &'static str,
}

const FIXTURES: &[Fixture] = &[
    Fixture {
        name: "and2",
        inputs: &[("a", 1), ("b", 1)],
        out_width: 1,
        verilog: "a & b",
        reference: "a & b",
        mutant: "a | b",
    },
    Fixture {
        name: "or4",
        inputs: &[("a", 4), ("b", 4)],
        out_width: 4,
        verilog: "a | b",
        reference: "a | b",
        mutant: "a ^ b",
    },
    Fixture {
        name: "xor4",
        inputs: &[("a", 4), ("b", 4)],
        out_width: 4,
        verilog: "a ^ b",
        reference: "a ^ b",
        mutant: "a & b",
    },
    Fixture {
        name: "add4",
        inputs: &[("a", 4), ("b", 4)],
        out_width: 5,
        verilog: "a + b",
        reference: "a + b",
        mutant: "a - b",
    },
    Fixture {
        name: "sub4",
        inputs: &[("a", 4), ("b", 4)],
        out_width: 4,
        verilog: "a - b",
        reference: "a - b",
        mutant: "a + b",
    },
    Fixture {
        name: "mux2",
        inputs: &[("s", 1), ("a", 4), ("b", 4)],
        out_width: 4,
        verilog: "(a & {4{s}}) | (b & {4{~s}})",
        reference: "s ? a : b",
        mutant: "(a & {4{s}}) & (b & {4{~s}})",
    },
    Fixture {
        name: "eq4",
        inputs: &[("a", 4), ("b", 4)],
        out_width: 1,
        verilog: "a == b",
        reference: "a == b",
        mutant: "a != b",
    },
    Fixture {
        name: "lt4",
        inputs: &[("a", 4), ("b", 4)],
        out_width: 1,
        verilog: "a < b",
        reference: "a < b",
        mutant: "a <= b",
    },
    Fixture {
        name: "gt4",
        inputs: &[("a", 4), ("b", 4)],
        out_width: 1,
        verilog: "a > b",
        reference: "a > b",
        mutant: "a >= b",
    },
    Fixture {
        name: "shl1",
        inputs: &[("a", 4)],
        out_width: 4,
        verilog: "a << 1",
        reference: "a << 1",
        mutant: "a >> 1",
    },
    Fixture {
        name: "shr2",
        inputs: &[("a", 4)],
        out_width: 4,
        verilog: "a >> 2",
        reference: "a >> 2",
        mutant: "a << 2",
    },
    Fixture {
        name: "nand4",
        inputs: &[("a", 4), ("b", 4)],
        out_width: 4,
        verilog: "~(a & b)",
        reference: "~(a & b)",
        mutant: "~(a | b)",
    },
    Fixture {
        name: "gray4",
        inputs: &[("a", 4)],
        out_width: 4,
        verilog: "a ^ (a >> 1)",
        reference: "a ^ (a >> 1)",
        mutant: "a ^ (a << 1)",
    },
    Fixture {
        name: "maj3",
        inputs: &[("a", 1), ("b", 1), ("c", 1)],
        out_width: 1,
        verilog: "(a & b) | (b & c) | (a & c)",
        reference: "(a & b) | (b & c) | (a & c)",
        mutant: "(a & b) | (b & c) & (a & c)",
    },
    Fixture {
        name: "parity8",
        inputs: &[("a", 8)],
        out_width: 1,
        verilog: "^a",
        reference: "reduce_xor(a)",
        mutant: "&a",
    },
    Fixture {
        name: "mul3",
        inputs: &[("a", 3), ("b", 3)],
        out_width: 6,
        verilog: "a * b",
        reference: "a * b",
        mutant: "a + b",
    },
    Fixture {
        name: "idem4",
        inputs: &[("a", 4)],
        out_width: 4,
        verilog: "a & a",
        reference: "a",
        mutant: "a | a",
    },
    Fixture {
        name: "land4",
        inputs: &[("a", 4), ("b", 4)],
        out_width: 1,
        verilog: "a && b",
        reference: "a && b",
        mutant: "a || b",
    },
    Fixture {
        name: "inc4",
        inputs: &[("a", 4)],
        out_width: 4,
        verilog: "a + 1",
        reference: "a + 1",
        mutant: "a - 1",
    },
    Fixture {
        name: "inv4",
        inputs: &[("a", 4)],
        out_width: 4,
        verilog: "~a",
        reference: "~a",
        mutant: "-a",
    },
];

fn module_text(f: &Fixture, expr: &str) -> String {
    let decl = |w: u32| {
        if w == 1 {
            String::new()
        } else {
            format!("[{}:0] ", w - 1)
        }
    };
    let ports: Vec<String> = f
        .inputs
        .iter()
        .map(|(n, w)| format!("input {}{n}", decl(*w)))
        .chain([format!("output {}y", decl(f.out_width))])
        .collect();
    format!(
        "module {}({});\n  assign y = {expr};\nendmodule\n",
        f.name,
        ports.join(", ")
    )
}

fn fixture_pair(f: &Fixture, expr: &str) -> ProblemCodePair {
    ProblemCodePair {
        id: f.name.into(),
        spec: ProblemSpec {
            level: Level::Easy,
            circuit_type: CircuitKind::Combinational,
            problem_type: "fixture".into(),
            seed: 0,
        },
        problem: format!("Implement `{}`.", f.name),
        verilog: module_text(f, expr),
        testbench: None,
        reference: Some(reference(f.inputs, &[("y", f.out_width, f.reference)])),
        verdict: None,
        notes: Vec::new(),
    }
}

/// Compares two designs on every input combination.
fn truth_tables_equal(f: &Fixture, a: &str, b: &str) -> Result<bool, String> {
    let da = parse_design(&module_text(f, a), None).map_err(|d| format!("{d:?}"))?;
    let db = parse_design(&module_text(f, b), None).map_err(|d| format!("{d:?}"))?;
    let bits: u32 = f.inputs.iter().map(|(_, w)| w).sum();
    for k in 0u128..1 << bits {
        let mut shift = 0;
        let mut inputs = BTreeMap::new();
        for (n, w) in f.inputs {
            inputs.insert(n.to_string(), BitVector::new(*w, (k >> shift) & ((1 << w) - 1)));
            shift += w;
        }
        let oa = eval_combinational(&da, &inputs).map_err(|e| e.to_string())?;
        let ob = eval_combinational(&db, &inputs).map_err(|e| e.to_string())?;
        if oa != ob {
            return Ok(false);
        }
    }
    Ok(true)
}

fn criterion_3() -> Outcome {
    let t = Instant::now();
    let cfg = JudgeConfig::default();
    let mut rejected = 0;
    let mut survivors = Vec::new();
    for (i, f) in FIXTURES.iter().enumerate() {
        let orig = filter_pair(&fixture_pair(f, f.verilog), 100, i as u64, &cfg);
        if orig.status != VerdictStatus::Accepted {
            return Err(format!("fixture {} not accepted: {:?}", f.name, orig.detail));
        }
        let mutant = filter_pair(&fixture_pair(f, f.mutant), 100, i as u64, &cfg);
        match mutant.status {
            VerdictStatus::FunctionalRejected => rejected += 1,
            _ => {
                if !truth_tables_equal(f, f.verilog, f.mutant)? {
                    return Err(format!(
                        "mutant of {} survived ({:?}) but is not equivalent",
                        f.name, mutant.status
                    ));
                }
                survivors.push(f.name);
            }
        }
    }
    if rejected < 19 {
        return Err(format!("only {rejected}/20 mutants rejected"));
    }
    within(
        Duration::from_secs(30),
        t,
        format!("{rejected}/20 mutants rejected; equivalent survivors {survivors:?}"),
    )
}

// ---------------------------------------------------------------- 4

fn criterion_4() -> Outcome {
    let mut r = rng(4);
    let eps = 1e-5;
    let mut worst = 0.0f64;
    for cfg in 0..20 {
        let d = r.random_range(2..7usize);
        let n_neg = r.random_range(1..5usize);
        let tau = [0.05, 0.1, 0.5, 1.0][cfg % 4];
        let denom = if cfg % 3 == 2 {
            Denominator::NegativesOnly
        } else {
            Denominator::Standard
        };
        let w: Vec<f64> = (0..d * d)
            .map(|i| if i % (d + 1) == 0 { 1.0 } else { 0.0 } + 0.3 * r.sample::<f64, _>(StandardNormal))
            .collect();
        let q = gauss_unit(&mut r, d);
        let p = gauss_unit(&mut r, d);
        let negs: Vec<Vec<f64>> = (0..n_neg).map(|_| gauss_unit(&mut r, d)).collect();
        let nr: Vec<&[f64]> = negs.iter().map(Vec::as_slice).collect();
        let (_, grad) = info_nce_loss(&w, d, &q, &p, &nr, tau, denom);
        for i in 0..d * d {
            let mut wp = w.clone();
            wp[i] += eps;
            let mut wm = w.clone();
            wm[i] -= eps;
            let fd = (info_nce_loss(&wp, d, &q, &p, &nr, tau, denom).0
                - info_nce_loss(&wm, d, &q, &p, &nr, tau, denom).0)
                / (2.0 * eps);
            let rel = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-6);
            worst = worst.max(rel);
            if rel > 1e-4 {
                return Err(format!(
                    "config {cfg} (d={d}, negatives={n_neg}, tau={tau}) entry {i}: analytic {} vs numeric {fd}",
                    grad[i]
                ));
            }
        }
    }
    for s in [-0.5, 0.0, 0.8] {
        let l = info_nce_from_sims(s, &[s], 0.05, Denominator::Standard).loss;
        if (l - std::f64::consts::LN_2).abs() > 1e-9 {
            return Err(format!("symmetric case s={s}: loss {l}"));
        }
    }
    Ok(format!(
        "20 configurations, worst relative error {worst:.2e}; symmetric loss = ln 2"
    ))
}

// ---------------------------------------------------------------- 5

fn top1_rate(model: &RetrieverModel, fx: &common::RotationFixture) -> Result<f64, String> {
    let idx = RetrieverIndex::new(model, &fx.store).map_err(|e| e.to_string())?;
    let mut hits = 0;
    for pid in &fx.test_ids {
        let top = idx.top_k_vec(&fx.queries[pid], 1).map_err(|e| e.to_string())?;
        if fx.store.chunks()[top[0].0].id == fx.positive[pid] {
            hits += 1;
        }
    }
    Ok(hits as f64 / fx.test_ids.len() as f64)
}

fn criterion_5() -> Outcome {
    let t = Instant::now();
    let fx = common::rotation_fixture(5, 500, 5000, 400, 9, 0.3);
    let identity = RetrieverModel::identity(fx.store.dim, 0.05, fx.store.embedder.clone());
    let base = top1_rate(&identity, &fx)?;
    let cfg = RetrieverConfig {
        epochs: 3,
        lr: 1e-2,
        tau: 0.05,
        batch_size: 16,
        seed: 5,
        ..Default::default()
    };
    let model = train_retriever(&fx.train_pairs, &fx.queries, &fx.store, &cfg).map_err(|e| e.to_string())?;
    let trained = top1_rate(&model, &fx)?;
    let detail = format!(
        "held-out top-1: trained {:.1}%, identity {:.1}% over {} problems",
        100.0 * trained,
        100.0 * base,
        fx.test_ids.len()
    );
    if trained < 0.95 || base > 0.40 {
        return Err(detail);
    }
    within(Duration::from_secs(120), t, detail)
}

// ---------------------------------------------------------------- 6

fn criterion_6() -> Outcome {
    let mut r = rng(6);
    let d = 32;
    let w = gauss_unit(&mut r, d);
    let teacher = |x: &[f64]| {
        let s: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum();
        (5.0 + 2.5 * (d as f64).sqrt() * s).clamp(0.0, 10.0)
    };
    let sample = |r: &mut rand_chacha::ChaCha8Rng, n: usize| -> Vec<(Vec<f64>, f64)> {
        (0..n)
            .map(|_| {
                let x = gauss_unit(r, d);
                let y = teacher(&x);
                (x, y)
            })
            .collect()
    };
    let train = sample(&mut r, 1500);
    let held = sample(&mut r, 500);
    let cfg = ScorerConfig {
        epochs: 50,
        seed: 6,
        ..Default::default()
    };
    let model = train_scorer(&train, &cfg).map_err(|e| e.to_string())?;
    let mut mse = 0.0;
    let mut var = 0.0;
    let mean = held.iter().map(|(_, y)| y).sum::<f64>() / held.len() as f64;
    for (x, y) in &held {
        let p = model.predict(x).map_err(|e| e.to_string())?;
        mse += (p - y).powi(2);
        var += (y - mean).powi(2);
    }
    mse /= held.len() as f64;
    var /= held.len() as f64;
    if mse >= 0.5 {
        return Err(format!("held-out MSE {mse:.3} (label variance {var:.3})"));
    }

    // 10 000 scores: 2 170 above the threshold, 130 exactly on it.
    let mut scores: Vec<f64> = Vec::new();
    scores.extend(
        (0..2170)
            .map(|_| r.random_range(6.5..=10.0))
            .map(|s: f64| if s == 6.5 { 10.0 } else { s }),
    );
    scores.extend(std::iter::repeat_n(6.5, 130));
    scores.extend((0..7700).map(|_| r.random_range(0.0..6.5)));
    scores.shuffle(&mut r);
    let samples: Vec<ScoredSample> = scores
        .iter()
        .enumerate()
        .map(|(i, &score)| ScoredSample {
            chunk_id: format!("c{i:05}"),
            score,
            source: ScoreSource::Model,
        })
        .collect();
    let kept = filter_high_quality(&samples, 6.5);
    let frac = kept.len() as f64 / samples.len() as f64;
    let inclusive = scores.iter().filter(|&&s| s >= 6.5).count() as f64 / scores.len() as f64;
    if (frac - 0.217).abs() > 0.001 {
        return Err(format!(
            "retained {:.2}% (a non-strict filter would keep {:.2}%)",
            100.0 * frac,
            100.0 * inclusive
        ));
    }
    let order: Vec<&String> = samples.iter().filter(|s| s.score > 6.5).map(|s| &s.chunk_id).collect();
    if kept.iter().collect::<Vec<_>>() != order {
        return Err("kept ids are not in input order".into());
    }
    Ok(format!(
        "held-out MSE {mse:.3} (label variance {var:.3}); retained {:.2}% with 130 ties at 6.5 excluded",
        100.0 * frac
    ))
}

// ---------------------------------------------------------------- 7

fn criterion_7() -> Outcome {
    let mut r = rng(7);
    let d = 32;
    let mut embs: Vec<Vec<f64>> = (0..900).map(|_| gauss_unit(&mut r, d)).collect();
    for j in 0..100 {
        embs.push(embs[j * 9].clone());
    }
    let mut ids: Vec<String> = (0..1000).map(|i| format!("k{i:04}")).collect();
    ids.shuffle(&mut r);
    let chunks: Vec<DocChunk> = ids
        .iter()
        .map(|id| DocChunk {
            id: id.clone(),
            kind: ChunkKind::Knowledge,
            text: format!("text of {id}"),
            source: "fixture".into(),
        })
        .collect();
    let store = ChunkStore::from_parts(ChunkKind::Knowledge, "fixture".into(), chunks, embs.clone())
        .map_err(|e| e.to_string())?;
    let projection: Vec<f64> = (0..d * d).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
    let model = RetrieverModel {
        dim: d,
        projection: projection.clone(),
        tau: 0.05,
        denominator: Denominator::Standard,
        base: "fixture".into(),
        meta: None,
    };
    let idx = RetrieverIndex::new(&model, &store).map_err(|e| e.to_string())?;
    let project = |x: &[f64]| -> Vec<f64> {
        let mut y: Vec<f64> = projection
            .chunks(d)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect();
        let n = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        y.iter_mut().for_each(|v| *v /= n);
        y
    };
    let projected: Vec<Vec<f64>> = embs.iter().map(|e| project(e)).collect();
    let mut tied_queries = 0;
    for qi in 0..100 {
        let q = if qi % 5 == 0 {
            tied_queries += 1;
            embs[(qi / 5) * 9].clone()
        } else {
            gauss_unit(&mut r, d)
        };
        let pq = project(&q);
        let mut scan: Vec<(usize, f64)> = projected
            .iter()
            .enumerate()
            .map(|(i, v)| (i, pq.iter().zip(v).map(|(a, b)| a * b).sum::<f64>().clamp(-1.0, 1.0)))
            .collect();
        scan.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(ids[a.0].cmp(&ids[b.0])));
        for k in [1000usize, 10] {
            let got = idx.top_k_vec(&q, k).map_err(|e| e.to_string())?;
            let want = &scan[..k];
            let gi: Vec<usize> = got.iter().map(|g| g.0).collect();
            let wi: Vec<usize> = want.iter().map(|w| w.0).collect();
            if gi != wi {
                return Err(format!("query {qi}, k={k}: order differs from the brute-force scan"));
            }
            if got.iter().zip(want).any(|(g, w)| (g.1 - w.1).abs() > 1e-12) {
                return Err(format!("query {qi}, k={k}: scores differ"));
            }
        }
        if qi % 5 == 0 && ids[scan[0].0] > ids[scan[1].0] {
            return Err(format!("query {qi}: duplicate tie not broken by id"));
        }
    }
    Ok(format!(
        "100 queries ({tied_queries} with exact top ties) match the brute-force scan"
    ))
}

// ---------------------------------------------------------------- 8

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn files_under(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn criterion_8() -> Outcome {
    let config = workspace_root().join("config/default.toml");
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut trees = Vec::new();
    for name in ["a", "b"] {
        let ov = Overrides {
            run_dir: Some(tmp.path().join(name)),
            ..Default::default()
        };
        let lc = load_config(&config, &ov).map_err(|e| e.to_string())?;
        run_pipeline(&lc).map_err(|e| e.to_string())?;
        trees.push(files_under(&tmp.path().join(name)));
    }
    let (a, b) = (&trees[0], &trees[1]);
    let names_a: BTreeSet<_> = a.keys().collect();
    let names_b: BTreeSet<_> = b.keys().collect();
    if names_a != names_b {
        return Err(format!(
            "file sets differ: {:?}",
            names_a.symmetric_difference(&names_b).collect::<Vec<_>>()
        ));
    }
    for (p, bytes) in a {
        if b[p] != *bytes {
            return Err(format!("{} differs between runs", p.display()));
        }
    }
    let jsonl = a.keys().filter(|p| p.extension().is_some_and(|e| e == "jsonl")).count();
    let manifests = a.keys().filter(|p| p.ends_with("manifest.json")).count();
    Ok(format!(
        "{} files ({jsonl} JSONL, {manifests} manifests) byte-identical across two runs on this platform",
        a.len()
    ))
}

// ---------------------------------------------------------------- 9

fn shipped_values(c: &PipelineConfig) -> Vec<(&'static str, f64)> {
    vec![
        ("eval.n", c.eval.n as f64),
        ("eval.top_p", c.eval.top_p),
        ("eval.temperature", c.eval.temperature),
        ("rag.k_example", c.rag.k_example as f64),
        ("rag.k_knowledge", c.rag.k_knowledge as f64),
        ("scorer.threshold", c.scorer.threshold),
        ("rag.retriever.epochs", c.rag.retriever.epochs as f64),
    ]
}

const EXPECTED: &[(&str, f64)] = &[
    ("eval.n", 10.0),
    ("eval.top_p", 0.95),
    ("eval.temperature", 0.8),
    ("rag.k_example", 2.0),
    ("rag.k_knowledge", 3.0),
    ("scorer.threshold", 6.5),
    ("rag.retriever.epochs", 3.0),
];

/// Rows of the form `| `key` | value | anchor |`.
fn doc_rows(text: &str) -> BTreeMap<String, (String, String)> {
    text.lines()
        .filter_map(|l| {
            let cells: Vec<&str> = l.trim().trim_matches('|').split('|').map(str::trim).collect();
            if cells.len() < 3 || !cells[0].starts_with('`') {
                return None;
            }
            Some((
                cells[0].trim_matches('`').to_string(),
                (cells[1].to_string(), cells[2].to_string()),
            ))
        })
        .collect()
}

fn criterion_9() -> Outcome {
    let root = workspace_root();
    let lc = load_config(&root.join("config/default.toml"), &Overrides::default()).map_err(|e| e.to_string())?;
    let minimal = PipelineConfig::parse("[paths]\ncorpus = \"c\"\nrun_dir = \"r\"\n").map_err(|e| e.to_string())?;
    let docs = fs::read_to_string(root.join("docs/defaults.md")).map_err(|e| format!("docs/defaults.md: {e}"))?;
    let rows = doc_rows(&docs);
    let mut problems = Vec::new();
    let shipped = shipped_values(&lc.config);
    let builtin = shipped_values(&minimal);
    for (((key, want), (_, got)), (_, dflt)) in EXPECTED.iter().zip(&shipped).zip(&builtin) {
        if got != want {
            problems.push(format!("shipped {key} = {got}, want {want}"));
        }
        if dflt != want {
            problems.push(format!("built-in default {key} = {dflt}, want {want}"));
        }
        match rows.get(*key) {
            None => problems.push(format!("docs/defaults.md has no row for {key}")),
            Some((v, anchor)) => {
                if v.parse::<f64>().ok() != Some(*want) {
                    problems.push(format!("docs/defaults.md lists {key} = {v}"));
                }
                if anchor.is_empty() {
                    problems.push(format!("docs/defaults.md row {key} has no anchor"));
                }
            }
        }
    }
    if problems.is_empty() {
        Ok("7 defaults match the shipped config, the built-in defaults and docs/defaults.md".into())
    } else {
        Err(problems.join("; "))
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("pass@k exactness", criterion_1),
        ("F(V) oracle", criterion_2),
        ("code filter mutation test", criterion_3),
        ("InfoNCE gradients", criterion_4),
        ("retriever training efficacy", criterion_5),
        ("scorer learnability and threshold", criterion_6),
        ("retrieval exactness", criterion_7),
        ("end-to-end determinism", criterion_8),
        ("defaults audit", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 9 acceptance criteria passed");
}
