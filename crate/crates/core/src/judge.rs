//! Syntax and functional judging shared by the code filter, the F(V)
//! accuracy oracle and the benchmark runner.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reference::{CompiledReference, ReferenceModel};
use crate::util::rng;
use crate::verilog::ast::PortDir;
use crate::verilog::external::run_external_testbench;
use crate::verilog::sim::Failure;
use crate::verilog::value::mask;
use crate::verilog::{
    check_syntax, parse_design, run_testbench, BitVector, EvalError, ModuleAst, SimConfig, SimError, SyntaxMode,
    SyntaxReport, TestbenchSpec, VectorStep, DEFAULT_MAX_CYCLES,
};

/// How a design's behaviour is checked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Judge {
    Testbench(TestbenchSpec),
    Reference(ReferenceModel),
}

fn default_vectors() -> usize {
    100
}
fn default_exhaustive() -> u32 {
    12
}
fn default_cycles() -> u64 {
    DEFAULT_MAX_CYCLES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeConfig {
    #[serde(default)]
    pub syntax_mode: SyntaxMode,
    #[serde(default)]
    pub sim: SimConfig,
    /// Random vectors per reference check.
    #[serde(default = "default_vectors")]
    pub n_vectors: usize,
    /// Enumerate every input combination up to this many input bits.
    #[serde(default = "default_exhaustive")]
    pub exhaustive_max_bits: u32,
    #[serde(default = "default_cycles")]
    pub max_cycles: u64,
}

impl Default for JudgeConfig {
    fn default() -> Self {
        JudgeConfig {
            syntax_mode: SyntaxMode::default(),
            sim: SimConfig::default(),
            n_vectors: default_vectors(),
            exhaustive_max_bits: default_exhaustive(),
            max_cycles: default_cycles(),
        }
    }
}

/// The first observed disagreement between design and judge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub step: usize,
    pub cycle: u64,
    pub inputs: BTreeMap<String, BitVector>,
    pub signal: String,
    pub expected: BitVector,
    pub got: BitVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum FuncVerdict {
    Pass { checks: usize },
    Fail { detail: String, witness: Option<Witness> },
    Unverifiable { detail: String },
}

impl FuncVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, FuncVerdict::Pass { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenVector {
    pub inputs: BTreeMap<String, BitVector>,
    pub outputs: BTreeMap<String, BitVector>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TestbenchError {
    #[error("no golden vectors")]
    Empty,
    #[error("golden vector {0} has a different port set than vector 0")]
    InconsistentPorts(usize),
}

/// One combinational step (no clock edges) per golden vector.
pub fn reconstruct_testbench(golden: &[GoldenVector]) -> Result<TestbenchSpec, TestbenchError> {
    let first = golden.first().ok_or(TestbenchError::Empty)?;
    let steps = golden
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let same = |a: &BTreeMap<String, BitVector>, b: &BTreeMap<String, BitVector>| {
                a.len() == b.len()
                    && a.iter()
                        .zip(b)
                        .all(|((ka, va), (kb, vb))| ka == kb && va.width() == vb.width())
            };
            if !same(&g.inputs, &first.inputs) || !same(&g.outputs, &first.outputs) {
                return Err(TestbenchError::InconsistentPorts(i));
            }
            Ok(VectorStep {
                apply: g.inputs.clone(),
                after: 0,
                expect: g.outputs.clone(),
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(TestbenchSpec::Vectors { clock: None, steps })
}

/// Input assignments for a reference check: every combination when the
/// total input width is at most `exhaustive_max_bits`, else `n` seeded
/// random vectors.
pub fn input_vectors(
    model: &ReferenceModel,
    n: usize,
    exhaustive_max_bits: u32,
    seed: u64,
) -> Vec<BTreeMap<String, BitVector>> {
    let total = model.total_input_bits();
    if total <= exhaustive_max_bits.min(24) {
        (0u128..1 << total)
            .map(|k| {
                let mut shift = 0;
                model
                    .inputs
                    .iter()
                    .map(|p| {
                        let v = (k >> shift) & mask(p.width);
                        shift += p.width;
                        (p.name.clone(), BitVector::new(p.width, v))
                    })
                    .collect()
            })
            .collect()
    } else {
        let mut r = rng(seed);
        (0..n)
            .map(|_| {
                model
                    .inputs
                    .iter()
                    .map(|p| {
                        (
                            p.name.clone(),
                            BitVector::new(p.width, r.random::<u128>() & mask(p.width)),
                        )
                    })
                    .collect()
            })
            .collect()
    }
}

pub fn golden_vectors(
    reference: &CompiledReference,
    inputs: Vec<BTreeMap<String, BitVector>>,
) -> Result<Vec<GoldenVector>, crate::reference::RefError> {
    inputs
        .into_iter()
        .map(|i| {
            let outputs = reference.eval(&i)?;
            Ok(GoldenVector { inputs: i, outputs })
        })
        .collect()
}

pub fn check(text: &str, cfg: &JudgeConfig) -> Result<SyntaxReport, SimError> {
    check_syntax(text, cfg.syntax_mode, &cfg.sim)
}

fn witness(tb: &TestbenchSpec, f: &Failure) -> Witness {
    let mut inputs = BTreeMap::new();
    if let TestbenchSpec::Vectors { steps, .. } = tb {
        for s in &steps[..=f.step.min(steps.len().saturating_sub(1))] {
            inputs.extend(s.apply.iter().map(|(k, v)| (k.clone(), *v)));
        }
    }
    Witness {
        step: f.step,
        cycle: f.cycle,
        inputs,
        signal: f.signal.clone(),
        expected: f.expected,
        got: f.got,
    }
}

fn run_vectors(dut: &ModuleAst, text: &str, tb: &TestbenchSpec, cfg: &JudgeConfig) -> FuncVerdict {
    if let Some(u) = dut.first_unsupported() {
        if cfg.sim.cmd.is_none() {
            return FuncVerdict::Unverifiable {
                detail: format!(
                    "unsupported construct `{}` at line {} and no external simulator",
                    u.construct, u.line
                ),
            };
        }
        let TestbenchSpec::Vectors { clock, steps } = tb else {
            unreachable!("vector testbench expected")
        };
        let source = vectors_to_verilog(dut, clock.as_deref(), steps, &cfg.sim.pass_sentinel);
        return run_external(text, &source, cfg);
    }
    let n = match tb {
        TestbenchSpec::Vectors { steps, .. } => steps.len(),
        TestbenchSpec::Verilog { .. } => 0,
    };
    match run_testbench(dut, tb, cfg.max_cycles) {
        Ok(run) if run.passed => FuncVerdict::Pass { checks: n },
        Ok(run) => {
            let f = &run.failures[0];
            FuncVerdict::Fail {
                detail: format!(
                    "{} mismatches; first at step {} cycle {}: `{}` expected {} got {}",
                    run.failures.len(),
                    f.step,
                    f.cycle,
                    f.signal,
                    f.expected,
                    f.got
                ),
                witness: Some(witness(tb, f)),
            }
        }
        Err(SimError::SimTimeout(c)) => FuncVerdict::Fail {
            detail: format!("simulation exceeded {c} cycles"),
            witness: None,
        },
        Err(SimError::Eval(e @ (EvalError::CombinationalLoop(_) | EvalError::LoopBound(_)))) => FuncVerdict::Fail {
            detail: e.to_string(),
            witness: None,
        },
        Err(e) => FuncVerdict::Unverifiable { detail: e.to_string() },
    }
}

fn run_external(text: &str, tb: &str, cfg: &JudgeConfig) -> FuncVerdict {
    match run_external_testbench(text, tb, &cfg.sim) {
        Ok(run) if run.passed => FuncVerdict::Pass { checks: 1 },
        Ok(_) => FuncVerdict::Fail {
            detail: "external testbench did not report success".into(),
            witness: None,
        },
        Err(e) => FuncVerdict::Unverifiable { detail: e.to_string() },
    }
}

/// Interface problems between a reference and a design, if any.
fn interface_mismatch(dut: &ModuleAst, model: &ReferenceModel) -> Option<String> {
    for p in &model.inputs {
        match dut.port(&p.name) {
            Some(d) if d.dir == PortDir::Input && d.width == p.width => {}
            Some(d) => return Some(format!("input `{}`: design has {:?} width {}", p.name, d.dir, d.width)),
            None => return Some(format!("design has no input `{}`", p.name)),
        }
    }
    for o in &model.outputs {
        match dut.port(&o.name) {
            Some(d) if d.dir != PortDir::Input && d.width == o.width => {}
            Some(d) => return Some(format!("output `{}`: design has {:?} width {}", o.name, d.dir, d.width)),
            None => return Some(format!("design has no output `{}`", o.name)),
        }
    }
    None
}

/// Functional check of `text` (assumed syntactically valid).
pub fn functional(text: &str, judge: &Judge, cfg: &JudgeConfig, seed: u64) -> FuncVerdict {
    let dut = match parse_design(text, None) {
        Ok(d) => Some(d),
        Err(diags) => {
            let msg = diags.first().map(|d| d.to_string()).unwrap_or_default();
            match judge {
                Judge::Testbench(TestbenchSpec::Verilog { source }) if cfg.sim.cmd.is_some() => {
                    return run_external(text, source, cfg)
                }
                _ => {
                    return FuncVerdict::Unverifiable {
                        detail: format!("internal front end cannot elaborate the design: {msg}"),
                    }
                }
            }
        }
    };
    let dut = dut.unwrap();
    match judge {
        Judge::Testbench(TestbenchSpec::Verilog { source }) => {
            if cfg.sim.cmd.is_none() {
                FuncVerdict::Unverifiable {
                    detail: "Verilog testbench needs an external simulator (`sim.cmd`)".into(),
                }
            } else {
                run_external(text, source, cfg)
            }
        }
        Judge::Testbench(tb) => run_vectors(&dut, text, tb, cfg),
        Judge::Reference(model) => {
            let compiled = match model.compile() {
                Ok(c) => c,
                Err(e) => {
                    return FuncVerdict::Unverifiable {
                        detail: format!("reference: {e}"),
                    }
                }
            };
            if crate::verilog::classify_circuit(&dut) == crate::verilog::CircuitKind::Sequential {
                return FuncVerdict::Unverifiable {
                    detail: "sequential design cannot be checked against a combinational reference".into(),
                };
            }
            if let Some(m) = interface_mismatch(&dut, model) {
                return FuncVerdict::Unverifiable {
                    detail: format!("interface mismatch: {m}"),
                };
            }
            let inputs = input_vectors(model, cfg.n_vectors, cfg.exhaustive_max_bits, seed);
            let golden = match golden_vectors(&compiled, inputs) {
                Ok(g) => g,
                Err(e) => {
                    return FuncVerdict::Unverifiable {
                        detail: format!("reference: {e}"),
                    }
                }
            };
            match reconstruct_testbench(&golden) {
                Ok(tb) => run_vectors(&dut, text, &tb, cfg),
                Err(e) => FuncVerdict::Unverifiable { detail: e.to_string() },
            }
        }
    }
}

/// F(V): 0 = syntax incorrect, 1 = syntax correct but functionally
/// incorrect (or unverifiable, flagged), 2 = both correct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub level: u8,
    pub unverifiable: bool,
    pub detail: String,
}

pub fn accuracy_level(text: &str, judge: &Judge, cfg: &JudgeConfig, seed: u64) -> Accuracy {
    match check(text, cfg) {
        Ok(r) if r.ok => {}
        Ok(r) => {
            return Accuracy {
                level: 0,
                unverifiable: false,
                detail: r.diagnostics.first().map(|d| d.to_string()).unwrap_or_default(),
            }
        }
        Err(e) => {
            return Accuracy {
                level: 0,
                unverifiable: true,
                detail: e.to_string(),
            }
        }
    }
    match functional(text, judge, cfg, seed) {
        FuncVerdict::Pass { .. } => Accuracy {
            level: 2,
            unverifiable: false,
            detail: String::new(),
        },
        FuncVerdict::Fail { detail, .. } => Accuracy {
            level: 1,
            unverifiable: false,
            detail,
        },
        FuncVerdict::Unverifiable { detail } => Accuracy {
            level: 1,
            unverifiable: true,
            detail,
        },
    }
}

fn verilog_literal(v: &BitVector) -> String {
    format!("{}'h{:x}", v.width(), v.bits() & mask(v.width()))
}

/// Renders a vector testbench as a Verilog testbench that prints
/// `sentinel` when every expectation holds.
pub fn vectors_to_verilog(dut: &ModuleAst, clock: Option<&str>, steps: &[VectorStep], sentinel: &str) -> String {
    let clk = clock.map(str::to_string).or_else(|| {
        ["clk", "clock", "CLK"]
            .iter()
            .find(|c| dut.port(c).is_some())
            .map(|c| c.to_string())
    });
    let mut s = String::new();
    let _ = writeln!(s, "`timescale 1ns/1ps");
    let _ = writeln!(s, "module tb_{};", dut.name);
    for p in &dut.ports {
        let kind = if p.dir == PortDir::Input { "reg" } else { "wire" };
        let _ = writeln!(s, "  {kind} [{}:0] {};", p.width - 1, p.name);
    }
    let _ = writeln!(s, "  integer errors;");
    let conns: Vec<String> = dut.ports.iter().map(|p| format!(".{0}({0})", p.name)).collect();
    let _ = writeln!(s, "  {} dut ({});", dut.name, conns.join(", "));
    let _ = writeln!(s, "  initial begin");
    let _ = writeln!(s, "    errors = 0;");
    for p in dut.inputs() {
        let _ = writeln!(s, "    {} = 0;", p.name);
    }
    for (i, step) in steps.iter().enumerate() {
        for (name, v) in &step.apply {
            let _ = writeln!(s, "    {name} = {};", verilog_literal(v));
        }
        let _ = writeln!(s, "    #1;");
        if step.after > 0 {
            if let Some(c) = &clk {
                let _ = writeln!(s, "    repeat ({}) begin {c} = 0; #5; {c} = 1; #5; end", step.after);
            }
        }
        for (name, e) in &step.expect {
            let care = e.known_mask() & mask(e.width());
            let _ = writeln!(
                s,
                "    if ((({name}) & {w}'h{care:x}) !== ({w}'h{:x} & {w}'h{care:x})) begin errors = errors + 1; \
                 $display(\"MISMATCH step {i} {name}=%h\", {name}); end",
                e.bits() & care,
                w = e.width(),
            );
        }
    }
    let _ = writeln!(s, "    if (errors == 0) $display(\"{sentinel}\");");
    let _ = writeln!(s, "    $finish;");
    let _ = writeln!(s, "  end");
    let _ = writeln!(s, "endmodule");
    s
}
