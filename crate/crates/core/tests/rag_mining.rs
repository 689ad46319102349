use std::collections::BTreeSet;

use vcoder_core::embedding::{build_embedder, EmbedderConfig};
use vcoder_core::evalkit::BenchmarkTask;
use vcoder_core::gateway::{MockGateway, MockRule, Select};
use vcoder_core::judge::{Judge, JudgeConfig};
use vcoder_core::rag::{mine_pairs, ChunkKind, ChunkStore, DocChunk, MiningConfig, Polarity};

const CORRECT: &str = "```verilog\nmodule and2(input a, input b, output y);\n  assign y = a & b;\nendmodule\n```";
const WRONG: &str = "```verilog\nmodule and2(input a, input b, output y);\n  assign y = a | b;\nendmodule\n```";
const BROKEN: &str = "```verilog\nmodule and2(input a, input b, output y)\n  assign y = a &;\n```";

fn reply_for(level: u8) -> String {
    [BROKEN, WRONG, CORRECT][level as usize].to_string()
}

fn task(id: &str) -> BenchmarkTask {
    let judge: Judge = serde_json::from_value(serde_json::json!({"reference": {
        "inputs": [{"name": "a", "width": 1}, {"name": "b", "width": 1}],
        "outputs": [{"name": "y", "width": 1, "expr": "a & b"}]
    }}))
    .unwrap();
    BenchmarkTask {
        id: id.into(),
        problem: format!("Problem {id}: write `and2`, a two-input AND gate with inputs a, b and output y."),
        judge,
        category: String::new(),
    }
}

fn store(n: usize) -> (ChunkStore, EmbedderConfig) {
    let cfg = EmbedderConfig::local(64);
    let chunks = (0..n)
        .map(|j| DocChunk {
            id: format!("c{j:02}"),
            kind: ChunkKind::Knowledge,
            text: format!("Note {j}: gates, wires and MARK{j:02} for retrieval."),
            source: format!("notes.md#{j}"),
        })
        .collect();
    let e = build_embedder(&cfg).unwrap();
    (
        ChunkStore::build(ChunkKind::Knowledge, chunks, e.as_ref(), &cfg).unwrap(),
        cfg,
    )
}

fn rule(tag: String, reply: String) -> MockRule {
    MockRule {
        tag,
        contains: None,
        replies: vec![reply],
        select: Select::Hash,
    }
}

fn mining_cfg(candidates: usize) -> MiningConfig {
    MiningConfig {
        candidates_per_problem: candidates,
        temperature: 0.8,
        top_p: 0.95,
        seed: 7,
        judge: JudgeConfig::default(),
    }
}

#[test]
fn chunk_that_lifts_accuracy_is_positive() {
    let (store, cfg) = store(2);
    let gw = MockGateway::from_rules(
        0,
        vec![
            rule("mine:P:base".into(), reply_for(1)),
            rule("mine:P:c00".into(), reply_for(2)),
            rule("mine:P:c01".into(), reply_for(1)),
        ],
    )
    .unwrap();
    let e = build_embedder(&cfg).unwrap();
    let report = mine_pairs(&[task("P")], &store, e.as_ref(), &gw, &mining_cfg(10)).unwrap();
    let got: BTreeSet<(String, Polarity)> = report.pairs.iter().map(|p| (p.chunk_id.clone(), p.polarity)).collect();
    let want: BTreeSet<(String, Polarity)> = [
        ("c00".to_string(), Polarity::Positive),
        ("c01".to_string(), Polarity::Negative),
    ]
    .into();
    assert_eq!(got, want);
    let a = report.pairs.iter().find(|p| p.chunk_id == "c00").unwrap();
    assert_eq!((a.evidence.f_base, a.evidence.f_with_chunk), (1, 2));
    assert!(report.skipped.is_empty());
}

#[test]
fn correct_baseline_leaves_only_negatives() {
    let (store, cfg) = store(5);
    let gw = MockGateway::from_rules(
        0,
        vec![
            rule("mine:P:base".into(), reply_for(2)),
            rule("mine:P:*".into(), reply_for(2)),
        ],
    )
    .unwrap();
    let e = build_embedder(&cfg).unwrap();
    let report = mine_pairs(&[task("P")], &store, e.as_ref(), &gw, &mining_cfg(10)).unwrap();
    assert_eq!(report.pairs.len(), 5);
    assert!(report.pairs.iter().all(|p| p.polarity == Polarity::Negative));
}

#[test]
fn gateway_failures_are_skipped_with_a_report_entry() {
    let (store, cfg) = store(3);
    let gw = MockGateway::from_rules(
        0,
        vec![
            rule("mine:P:base".into(), reply_for(0)),
            rule("mine:P:c00".into(), reply_for(1)),
            rule("mine:P:c01".into(), reply_for(0)),
        ],
    )
    .unwrap();
    let e = build_embedder(&cfg).unwrap();
    let report = mine_pairs(&[task("P"), task("Q")], &store, e.as_ref(), &gw, &mining_cfg(10)).unwrap();
    assert_eq!(report.pairs.len(), 2);
    let skipped: BTreeSet<(String, Option<String>)> = report
        .skipped
        .iter()
        .map(|s| (s.problem_id.clone(), s.chunk_id.clone()))
        .collect();
    let want: BTreeSet<(String, Option<String>)> =
        [("P".to_string(), Some("c02".to_string())), ("Q".to_string(), None)].into();
    assert_eq!(skipped, want);
}

#[test]
fn candidate_count_bounds_llm_calls() {
    let (store, cfg) = store(10);
    let gw = MockGateway::from_rules(0, vec![rule("mine:*".into(), reply_for(1))]).unwrap();
    let e = build_embedder(&cfg).unwrap();
    let report = mine_pairs(&[task("P")], &store, e.as_ref(), &gw, &mining_cfg(4)).unwrap();
    assert_eq!(report.pairs.len(), 4);
}

/// 50 problems by 10 chunks with planted accuracy levels for every baseline
/// and every (problem, chunk) generation.
#[test]
fn planted_truth_is_recovered_exactly() {
    let (store, cfg) = store(10);
    let base_level = |p: usize| (p % 3) as u8;
    let chunk_level = |p: usize, j: usize| ((p * 7 + j * 3 + p / 5) % 3) as u8;
    let mut rules = Vec::new();
    let mut want = BTreeSet::new();
    for p in 0..50 {
        let pid = format!("p{p:02}");
        rules.push(rule(format!("mine:{pid}:base"), reply_for(base_level(p))));
        for j in 0..10 {
            let cid = format!("c{j:02}");
            rules.push(rule(format!("mine:{pid}:{cid}"), reply_for(chunk_level(p, j))));
            let pol = if chunk_level(p, j) > base_level(p) {
                Polarity::Positive
            } else {
                Polarity::Negative
            };
            want.insert((pid.clone(), cid, pol, base_level(p), chunk_level(p, j)));
        }
    }
    let gw = MockGateway::from_rules(0, rules).unwrap();
    let e = build_embedder(&cfg).unwrap();
    let tasks: Vec<BenchmarkTask> = (0..50).map(|p| task(&format!("p{p:02}"))).collect();
    let report = mine_pairs(&tasks, &store, e.as_ref(), &gw, &mining_cfg(10)).unwrap();
    assert!(report.skipped.is_empty());
    let got: BTreeSet<_> = report
        .pairs
        .iter()
        .map(|p| {
            (
                p.problem_id.clone(),
                p.chunk_id.clone(),
                p.polarity,
                p.evidence.f_base,
                p.evidence.f_with_chunk,
            )
        })
        .collect();
    assert_eq!(report.pairs.len(), 500);
    assert_eq!(got, want);
    let positives = want.iter().filter(|w| w.2 == Polarity::Positive).count();
    assert_eq!(
        report.pairs.iter().filter(|p| p.polarity == Polarity::Positive).count(),
        positives
    );
    for p in &report.pairs {
        assert_eq!(
            p.polarity == Polarity::Positive,
            p.evidence.f_with_chunk > p.evidence.f_base
        );
    }
}
