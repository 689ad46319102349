//! Synthetic problem/code pairs: keyword-templated generation prompts,
//! reply parsing, the code filter, and SFT export.

use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::gateway::{ChatRequest, GatewayError, LlmGateway, Message};
use crate::judge::{self, FuncVerdict, Judge, JudgeConfig, Witness};
use crate::reference::ReferenceModel;
use crate::util::{rng_for, sub_seed, write_atomic};
use crate::verilog::{classify_circuit, parse_design, CircuitKind, TestbenchSpec};

pub use crate::judge::{reconstruct_testbench, GoldenVector, TestbenchError};

/// Built-in problem-type list (also shipped as `config/problem_types.txt`).
pub const DEFAULT_PROBLEM_TYPES: &str = include_str!("../../../config/problem_types.txt");

pub fn parse_problem_types(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

pub fn default_problem_types() -> Vec<String> {
    parse_problem_types(DEFAULT_PROBLEM_TYPES)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Easy,
    Normal,
    Hard,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Easy => "easy",
            Level::Normal => "normal",
            Level::Hard => "hard",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub level: Level,
    pub circuit_type: CircuitKind,
    pub problem_type: String,
    pub seed: u64,
}

/// `count` specs. Problem types are drawn by walking seeded permutations of
/// the list, so any `types.len()` consecutive specs have distinct types.
pub fn sample_specs(count: usize, seed: u64, types: &[String]) -> Vec<ProblemSpec> {
    assert!(!types.is_empty(), "problem type list is empty");
    let mut specs = Vec::with_capacity(count);
    let mut order: Vec<usize> = Vec::new();
    for i in 0..count {
        if i % types.len() == 0 {
            order = (0..types.len()).collect();
            order.shuffle(&mut rng_for(seed, "synth-types", &(i / types.len()).to_string()));
        }
        let mut r = rng_for(seed, "synth-spec", &i.to_string());
        let level = [Level::Easy, Level::Normal, Level::Hard][r.random_range(0..3)];
        let circuit_type = if r.random_bool(0.5) {
            CircuitKind::Combinational
        } else {
            CircuitKind::Sequential
        };
        specs.push(ProblemSpec {
            level,
            circuit_type,
            problem_type: types[order[i % types.len()]].clone(),
            seed: sub_seed(seed, "synth", &i.to_string()),
        });
    }
    specs
}

fn circuit_word(c: CircuitKind) -> &'static str {
    match c {
        CircuitKind::Combinational => "combinational",
        CircuitKind::Sequential => "sequential",
    }
}

pub fn make_problem_prompt(spec: &ProblemSpec) -> String {
    format!(
        "Write one {level} Verilog design exercise about a {ptype}, implemented as {circuit} logic.\n\
         Answer with exactly four sections, each introduced by its header line.\n\
         \n\
         ### PROBLEM\n\
         A self-contained task statement naming the module, every port with its width, and the required behaviour.\n\
         \n\
         ### VERILOG\n\
         A complete Verilog-2001 solution in a ```verilog fenced block.\n\
         \n\
         ### TESTBENCH\n\
         For sequential logic, a JSON object of the form \
         {{\"kind\": \"vectors\", \"clock\": \"clk\", \"steps\": [{{\"apply\": {{\"rst\": \"1\"}}, \"after\": 1, \"expect\": {{\"q\": \"4'h0\"}}}}]}} \
         where `after` counts rising clock edges, or a self-checking Verilog testbench that prints ALL TESTS PASSED.\n\
         \n\
         ### REFERENCE\n\
         For combinational logic, a JSON object \
         {{\"inputs\": [{{\"name\": \"a\", \"width\": 4}}], \"outputs\": [{{\"name\": \"y\", \"width\": 4, \"expr\": \"~a\"}}]}} \
         whose C-style expressions compute every output from the inputs.\n",
        level = spec.level,
        ptype = spec.problem_type,
        circuit = circuit_word(spec.circuit_type),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    Accepted,
    SyntaxRejected,
    FunctionalRejected,
    Unverifiable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub status: VerdictStatus,
    #[serde(default)]
    pub detail: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circuit: Option<CircuitKind>,
}

impl FilterVerdict {
    fn new(status: VerdictStatus, detail: impl Into<String>) -> Self {
        FilterVerdict {
            status,
            detail: vec![detail.into()],
            witness: None,
            circuit: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemCodePair {
    pub id: String,
    pub spec: ProblemSpec,
    pub problem: String,
    pub verilog: String,
    #[serde(default)]
    pub testbench: Option<TestbenchSpec>,
    #[serde(default)]
    pub reference: Option<ReferenceModel>,
    #[serde(default)]
    pub verdict: Option<FilterVerdict>,
    /// Section parse problems.
    #[serde(default)]
    pub notes: Vec<String>,
}

/// Raw section texts of a generation reply.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Sections {
    pub problem: Option<String>,
    pub verilog: Option<String>,
    pub testbench: Option<String>,
    pub reference: Option<String>,
}

fn header_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?mi)^[ \t]*#{2,4}[ \t]*(PROBLEM|VERILOG|TESTBENCH|REFERENCE)[ \t]*:?[ \t]*\r?$").unwrap()
    })
}

fn fence_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?s)```[A-Za-z0-9_+-]*[ \t]*\r?\n(.*?)```").unwrap())
}

/// Contents of the first fenced block, else the trimmed text.
pub fn strip_fence(text: &str) -> String {
    match fence_re().captures(text) {
        Some(c) => c[1].trim_end().to_string(),
        None => text.trim().to_string(),
    }
}

/// Splits a reply at `### NAME` header lines. Empty sections count as
/// missing; a repeated header keeps its first occurrence.
pub fn parse_sections(reply: &str) -> Sections {
    let heads: Vec<_> = header_re()
        .captures_iter(reply)
        .map(|c| {
            let m = c.get(0).unwrap();
            (c[1].to_ascii_uppercase(), m.start(), m.end())
        })
        .collect();
    let mut s = Sections::default();
    for (i, (name, _, end)) in heads.iter().enumerate() {
        let stop = heads.get(i + 1).map_or(reply.len(), |h| h.1);
        let body = strip_fence(&reply[*end..stop]);
        if body.is_empty() {
            continue;
        }
        let slot = match name.as_str() {
            "PROBLEM" => &mut s.problem,
            "VERILOG" => &mut s.verilog,
            "TESTBENCH" => &mut s.testbench,
            _ => &mut s.reference,
        };
        if slot.is_none() {
            *slot = Some(if name == "PROBLEM" {
                reply[*end..stop].trim().to_string()
            } else {
                body
            });
        }
    }
    s
}

fn parse_testbench(text: &str) -> Result<TestbenchSpec, String> {
    let t = text.trim();
    if t.starts_with('{') {
        TestbenchSpec::from_json(t).map_err(|e| e.to_string())
    } else if t.contains("module") {
        Ok(TestbenchSpec::Verilog { source: t.to_string() })
    } else {
        Err("testbench is neither JSON vectors nor Verilog".into())
    }
}

/// Sections required for `kind` that are absent or unusable.
fn missing_sections(
    s: &Sections,
    kind: CircuitKind,
    tb: &Option<TestbenchSpec>,
    rf: &Option<ReferenceModel>,
) -> Vec<&'static str> {
    let mut m = Vec::new();
    if s.problem.is_none() {
        m.push("PROBLEM");
    }
    if s.verilog.is_none() {
        m.push("VERILOG");
    }
    match kind {
        CircuitKind::Sequential if tb.is_none() => m.push("TESTBENCH"),
        CircuitKind::Combinational if rf.is_none() => m.push("REFERENCE"),
        _ => {}
    }
    m
}

fn build_pair(id: &str, spec: &ProblemSpec, reply: &str) -> (ProblemCodePair, Vec<&'static str>) {
    let s = parse_sections(reply);
    let mut notes = Vec::new();
    let testbench = s.testbench.as_deref().and_then(|t| match parse_testbench(t) {
        Ok(tb) => Some(tb),
        Err(e) => {
            notes.push(format!("TESTBENCH: {e}"));
            None
        }
    });
    let reference = s
        .reference
        .as_deref()
        .and_then(|t| match serde_json::from_str::<ReferenceModel>(t) {
            Ok(r) => Some(r),
            Err(e) => {
                notes.push(format!("REFERENCE: {e}"));
                None
            }
        });
    let missing = missing_sections(&s, spec.circuit_type, &testbench, &reference);
    let pair = ProblemCodePair {
        id: id.to_string(),
        spec: spec.clone(),
        problem: s.problem.unwrap_or_default(),
        verilog: s.verilog.unwrap_or_default(),
        testbench,
        reference,
        verdict: None,
        notes,
    };
    (pair, missing)
}

pub fn pair_id(spec: &ProblemSpec) -> String {
    format!("{:016x}", spec.seed)
}

/// Generates and parses one pair. Missing sections trigger one follow-up
/// turn; if they are still missing the pair is marked unverifiable.
pub fn generate_pair(
    spec: &ProblemSpec,
    gateway: &dyn LlmGateway,
    temperature: f64,
    top_p: f64,
) -> Result<ProblemCodePair, GatewayError> {
    let id = pair_id(spec);
    let mut messages = vec![Message::user(make_problem_prompt(spec))];
    let req = ChatRequest::new("synth", messages.clone()).with_sampling(temperature, top_p);
    let reply = gateway.complete(&req)?;
    let (pair, missing) = build_pair(&id, spec, &reply);
    if missing.is_empty() {
        return Ok(pair);
    }
    messages.push(Message {
        role: "assistant".into(),
        content: reply,
    });
    messages.push(Message::user(format!(
        "Your answer is missing or has unusable sections: {}. Reply again with all four sections.",
        missing.join(", ")
    )));
    let req = ChatRequest::new("synth", messages).with_sampling(temperature, top_p);
    let reply = gateway.complete(&req)?;
    let (mut pair, missing) = build_pair(&id, spec, &reply);
    if !missing.is_empty() {
        let mut v = FilterVerdict::new(
            VerdictStatus::Unverifiable,
            format!("SectionParseError: missing {}", missing.join(", ")),
        );
        v.detail.extend(pair.notes.iter().cloned());
        pair.verdict = Some(v);
    }
    Ok(pair)
}

/// Generates one pair per spec in parallel. Gateway errors become
/// unverifiable pairs.
pub fn generate_pairs(
    specs: &[ProblemSpec],
    gateway: &dyn LlmGateway,
    temperature: f64,
    top_p: f64,
) -> Vec<ProblemCodePair> {
    specs
        .par_iter()
        .map(|spec| {
            generate_pair(spec, gateway, temperature, top_p).unwrap_or_else(|e| ProblemCodePair {
                id: pair_id(spec),
                spec: spec.clone(),
                problem: String::new(),
                verilog: String::new(),
                testbench: None,
                reference: None,
                verdict: Some(FilterVerdict::new(VerdictStatus::Unverifiable, format!("gateway: {e}"))),
                notes: Vec::new(),
            })
        })
        .collect()
}

/// The code filter: syntax check, then a differential check against the
/// reference (combinational) or the supplied testbench (sequential).
pub fn filter_pair(pair: &ProblemCodePair, n_vectors: usize, seed: u64, cfg: &JudgeConfig) -> FilterVerdict {
    if pair.verilog.trim().is_empty() {
        return pair
            .verdict
            .clone()
            .unwrap_or_else(|| FilterVerdict::new(VerdictStatus::Unverifiable, "no Verilog section"));
    }
    match judge::check(&pair.verilog, cfg) {
        Ok(r) if r.ok => {}
        Ok(r) => {
            return FilterVerdict {
                status: VerdictStatus::SyntaxRejected,
                detail: r.diagnostics.iter().map(|d| d.to_string()).collect(),
                witness: None,
                circuit: None,
            }
        }
        Err(e) => return FilterVerdict::new(VerdictStatus::Unverifiable, format!("syntax checker: {e}")),
    }
    let circuit = match parse_design(&pair.verilog, None) {
        Ok(ast) => classify_circuit(&ast),
        Err(d) => {
            let first = d.first().map(|d| d.to_string()).unwrap_or_default();
            return FilterVerdict::new(VerdictStatus::Unverifiable, format!("cannot classify circuit: {first}"));
        }
    };
    let judge = match (circuit, &pair.reference, &pair.testbench) {
        (CircuitKind::Combinational, Some(r), _) => Judge::Reference(r.clone()),
        (_, _, Some(tb)) => Judge::Testbench(tb.clone()),
        (CircuitKind::Combinational, None, None) => {
            return FilterVerdict {
                circuit: Some(circuit),
                ..FilterVerdict::new(
                    VerdictStatus::Unverifiable,
                    "combinational pair without a reference model",
                )
            }
        }
        (CircuitKind::Sequential, _, None) => {
            return FilterVerdict {
                circuit: Some(circuit),
                ..FilterVerdict::new(
                    VerdictStatus::Unverifiable,
                    "sequential pair without a usable testbench",
                )
            }
        }
    };
    let cfg = JudgeConfig {
        n_vectors,
        ..cfg.clone()
    };
    let verdict = match judge::functional(&pair.verilog, &judge, &cfg, sub_seed(seed, "filter", &pair.id)) {
        FuncVerdict::Pass { checks } => FilterVerdict::new(VerdictStatus::Accepted, format!("{checks} checks passed")),
        FuncVerdict::Fail { detail, witness } => FilterVerdict {
            witness,
            ..FilterVerdict::new(VerdictStatus::FunctionalRejected, detail)
        },
        FuncVerdict::Unverifiable { detail } => FilterVerdict::new(VerdictStatus::Unverifiable, detail),
    };
    FilterVerdict {
        circuit: Some(circuit),
        ..verdict
    }
}

/// Filters every pair in parallel, attaching its verdict.
pub fn filter_pairs(
    pairs: Vec<ProblemCodePair>,
    n_vectors: usize,
    seed: u64,
    cfg: &JudgeConfig,
) -> Vec<ProblemCodePair> {
    pairs
        .into_par_iter()
        .map(|mut p| {
            p.verdict = Some(filter_pair(&p, n_vectors, seed, cfg));
            p
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftText {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SftInstruction {
    pub instruction: String,
    pub response: String,
}

fn write_sft<T: Serialize>(path: &Path, round: u8, rows: &[T]) -> std::io::Result<()> {
    let mut out = format!("# sft round {round}: {} rows\n", rows.len());
    out.push_str(&crate::util::to_jsonl(rows));
    write_atomic(path, out.as_bytes())
}

/// Round 1: `{text}` rows of high-scoring modules.
pub fn export_sft_round1(texts: &[String], path: &Path) -> std::io::Result<()> {
    let rows: Vec<SftText> = texts.iter().map(|t| SftText { text: t.clone() }).collect();
    write_sft(path, 1, &rows)
}

/// Round 2: `{instruction, response}` rows of accepted pairs, in input order.
pub fn export_sft_round2(pairs: &[ProblemCodePair], path: &Path) -> std::io::Result<usize> {
    let rows: Vec<SftInstruction> = pairs
        .iter()
        .filter(|p| p.verdict.as_ref().is_some_and(|v| v.status == VerdictStatus::Accepted))
        .map(|p| SftInstruction {
            instruction: p.problem.clone(),
            response: p.verilog.clone(),
        })
        .collect();
    write_sft(path, 2, &rows)?;
    Ok(rows.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{MockGateway, MockRule};

    fn spec(level: Level, kind: CircuitKind, ptype: &str) -> ProblemSpec {
        ProblemSpec {
            level,
            circuit_type: kind,
            problem_type: ptype.into(),
            seed: 1,
        }
    }

    #[test]
    fn prompt_keywords_and_level_slot() {
        let a = make_problem_prompt(&spec(Level::Easy, CircuitKind::Combinational, "multiplexer"));
        for w in ["easy", "combinational", "multiplexer"] {
            assert!(a.contains(w), "missing {w}");
        }
        let b = make_problem_prompt(&spec(Level::Hard, CircuitKind::Combinational, "multiplexer"));
        assert_ne!(a, b);
        assert_eq!(a.replacen("easy", "hard", 1), b);
    }

    #[test]
    fn specs_are_distinct_and_reproducible() {
        let types = default_problem_types();
        assert_eq!(types.len(), 40);
        let s = sample_specs(30, 9, &types);
        let prompts: std::collections::HashSet<_> = s.iter().map(make_problem_prompt).collect();
        assert_eq!(prompts.len(), 30);
        assert_eq!(s, sample_specs(30, 9, &types));
        assert_ne!(s, sample_specs(30, 10, &types));
    }

    const MUX_REPLY: &str = "### PROBLEM\nDesign a 2:1 multiplexer `mux2` with inputs a, b, s and output y.\n\n\
### VERILOG\n```verilog\nmodule mux2(input a, input b, input s, output y);\n  assign y = s ? b : a;\nendmodule\n```\n\n\
### TESTBENCH\n{\"kind\": \"vectors\", \"steps\": [{\"apply\": {\"a\": \"1'b1\", \"b\": \"1'b0\", \"s\": \"1'b0\"}, \"expect\": {\"y\": \"1'b1\"}}]}\n\n\
### REFERENCE\n```json\n{\"inputs\": [{\"name\": \"a\", \"width\": 1}, {\"name\": \"b\", \"width\": 1}, {\"name\": \"s\", \"width\": 1}], \"outputs\": [{\"name\": \"y\", \"width\": 1, \"expr\": \"s ? b : a\"}]}\n```\n";

    fn mock(reply: &str) -> MockGateway {
        MockGateway::from_rules(
            0,
            vec![MockRule {
                tag: "synth".into(),
                contains: None,
                replies: vec![reply.into()],
                select: Default::default(),
            }],
        )
        .unwrap()
    }

    #[test]
    fn full_reply_parses_and_is_accepted() {
        let sp = spec(Level::Easy, CircuitKind::Combinational, "multiplexer");
        let pair = generate_pair(&sp, &mock(MUX_REPLY), 0.8, 0.95).unwrap();
        assert!(pair.problem.starts_with("Design a 2:1"));
        assert!(pair.verilog.starts_with("module mux2"));
        assert!(pair.testbench.is_some() && pair.reference.is_some());
        assert!(pair.verdict.is_none());
        let v = filter_pair(&pair, 100, 3, &JudgeConfig::default());
        assert_eq!(v.status, VerdictStatus::Accepted, "{v:?}");
        assert_eq!(v.circuit, Some(CircuitKind::Combinational));
    }

    #[test]
    fn mutant_and_broken_dut() {
        let sp = spec(Level::Easy, CircuitKind::Combinational, "multiplexer");
        let mut pair = generate_pair(&sp, &mock(MUX_REPLY), 0.8, 0.95).unwrap();
        pair.verilog = pair.verilog.replace("s ? b : a", "s ? a : b");
        let v = filter_pair(&pair, 100, 3, &JudgeConfig::default());
        assert_eq!(v.status, VerdictStatus::FunctionalRejected);
        assert!(v.witness.is_some());
        pair.verilog = pair.verilog.replace("endmodule", "");
        let v = filter_pair(&pair, 100, 3, &JudgeConfig::default());
        assert_eq!(v.status, VerdictStatus::SyntaxRejected);
    }

    #[test]
    fn sequential_without_reference_is_fine() {
        let reply = "### PROBLEM\nA D flip-flop.\n### VERILOG\n```verilog\nmodule dff(input clk, input d, output reg q);\n  always @(posedge clk) q <= d;\nendmodule\n```\n### TESTBENCH\n{\"kind\": \"vectors\", \"steps\": [{\"apply\": {\"d\": \"1\"}, \"after\": 1, \"expect\": {\"q\": \"1\"}}, {\"apply\": {\"d\": \"0\"}, \"after\": 1, \"expect\": {\"q\": \"0\"}}]}\n";
        let sp = spec(Level::Easy, CircuitKind::Sequential, "D flip-flop");
        let pair = generate_pair(&sp, &mock(reply), 0.8, 0.95).unwrap();
        assert!(pair.reference.is_none());
        assert!(pair.verdict.is_none());
        let v = filter_pair(&pair, 100, 0, &JudgeConfig::default());
        assert_eq!(v.status, VerdictStatus::Accepted, "{v:?}");
        assert_eq!(v.circuit, Some(CircuitKind::Sequential));
    }

    #[test]
    fn missing_sections_after_retry_are_unverifiable() {
        let sp = spec(Level::Easy, CircuitKind::Combinational, "multiplexer");
        let pair = generate_pair(&sp, &mock("### PROBLEM\nonly a problem\n"), 0.8, 0.95).unwrap();
        let v = pair.verdict.clone().unwrap();
        assert_eq!(v.status, VerdictStatus::Unverifiable);
        assert!(v.detail[0].contains("VERILOG"));
        assert_eq!(
            filter_pair(&pair, 100, 0, &JudgeConfig::default()).status,
            VerdictStatus::Unverifiable
        );
    }

    #[test]
    fn sft_export_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sft2.jsonl");
        assert_eq!(export_sft_round2(&[], &p).unwrap(), 0);
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with('#'));

        let sp = spec(Level::Easy, CircuitKind::Combinational, "multiplexer");
        let mut pairs = Vec::new();
        for i in 0..3 {
            let mut pr = generate_pair(&sp, &mock(MUX_REPLY), 0.8, 0.95).unwrap();
            pr.problem = format!("problem {i}");
            pr.verdict = Some(FilterVerdict::new(VerdictStatus::Accepted, ""));
            pairs.push(pr);
        }
        assert_eq!(export_sft_round2(&pairs, &p).unwrap(), 3);
        let rows: Vec<SftInstruction> = crate::util::read_jsonl(&p).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[2].instruction, "problem 2");
        let raw = std::fs::read_to_string(&p).unwrap();
        let v: serde_json::Value = serde_json::from_str(raw.lines().nth(1).unwrap()).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys, ["instruction", "response"]);

        let p1 = dir.path().join("sft1.jsonl");
        export_sft_round1(&["module a; endmodule".into()], &p1).unwrap();
        let rows: Vec<SftText> = crate::util::read_jsonl(&p1).unwrap();
        assert_eq!(rows[0].text, "module a; endmodule");
    }
}
