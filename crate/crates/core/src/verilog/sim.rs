//! Cycle-level two-state simulator for flattened modules.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ast::*;
use super::eval::{self, Ctx, EvalError, Values, Write};
use super::value::{mask, BitVector};

/// Default bound on clock edges for one testbench run.
pub const DEFAULT_MAX_CYCLES: u64 = 10_000;

/// Bound on edge-triggered delta rounds after one stimulus change.
const MAX_DELTAS: usize = 1_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("simulation exceeded {0} clock cycles")]
    SimTimeout(u64),
    #[error("external simulator unavailable: {0}")]
    ExternalToolUnavailable(String),
    #[error("malformed testbench: {0}")]
    ParseError(String),
    #[error("testbench refers to unknown signal `{0}`")]
    UnknownSignal(String),
    #[error("external simulator failed: {0}")]
    External(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CircuitKind {
    Combinational,
    Sequential,
}

/// Sequential iff some always block is edge-triggered.
pub fn classify_circuit(ast: &ModuleAst) -> CircuitKind {
    if ast.always_blocks.iter().any(|b| matches!(b.trigger, Trigger::Edges(_))) {
        CircuitKind::Sequential
    } else {
        CircuitKind::Combinational
    }
}

#[derive(Debug, Clone)]
pub struct Simulator<'m> {
    module: &'m ModuleAst,
    vals: Values,
    /// Last observed LSB of every edge-sensitive net.
    prev: Vec<(NetId, u128)>,
}

impl<'m> Simulator<'m> {
    /// Builds a simulator, runs `initial` blocks and settles.
    pub fn new(module: &'m ModuleAst) -> Result<Self, EvalError> {
        if let Some(u) = module.first_unsupported() {
            return Err(EvalError::UnsupportedConstruct {
                construct: u.construct.clone(),
                line: u.line,
            });
        }
        if let Some(inst) = module.instances.first() {
            return Err(EvalError::UnsupportedConstruct {
                construct: format!("unelaborated instance `{}`", inst.name),
                line: inst.line,
            });
        }
        let mut sim = Simulator {
            module,
            vals: eval::initial_values(&module.nets),
            prev: Vec::new(),
        };
        let mut nba = Vec::new();
        for s in &module.initial_blocks {
            eval::exec(s, &module.nets, &mut sim.vals, &mut nba)?;
        }
        nba.iter().for_each(|w| eval::apply(&mut sim.vals, w));
        sim.settle()?;
        let mut edge_nets: Vec<NetId> = module
            .always_blocks
            .iter()
            .flat_map(|b| match &b.trigger {
                Trigger::Edges(es) => es.iter().map(|(_, n)| *n).collect(),
                Trigger::Combinational => Vec::new(),
            })
            .collect();
        edge_nets.sort_unstable();
        edge_nets.dedup();
        sim.prev = edge_nets.into_iter().map(|n| (n, sim.vals[n][0] & 1)).collect();
        Ok(sim)
    }

    pub fn module(&self) -> &ModuleAst {
        self.module
    }

    /// Drives an input port. With `strict`, the value width must equal the
    /// port width; otherwise narrower values are zero-extended.
    pub fn set_input(&mut self, name: &str, value: BitVector, strict: bool) -> Result<(), EvalError> {
        let port = self
            .module
            .port(name)
            .filter(|p| p.dir == PortDir::Input)
            .ok_or_else(|| EvalError::UnknownPort(name.to_string()))?;
        if !value.is_fully_known() {
            return Err(EvalError::UnknownInput(name.to_string()));
        }
        let fits = value.bits() & !mask(port.width) == 0;
        if (strict && value.width() != port.width) || !fits {
            return Err(EvalError::WidthMismatch {
                port: name.to_string(),
                expected: port.width,
                got: value.width(),
            });
        }
        self.vals[port.net][0] = value.bits();
        Ok(())
    }

    /// Current value of a net by (possibly hierarchical) name.
    pub fn get(&self, name: &str) -> Option<BitVector> {
        let id = self.module.net_id(name)?;
        let n = &self.module.nets[id];
        if n.array.is_some() {
            return None;
        }
        Some(BitVector::new(n.width(), self.vals[id][0]))
    }

    /// Iterates continuous assigns and combinational blocks to a fixed point.
    pub fn settle(&mut self) -> Result<(), EvalError> {
        let m = self.module;
        let limit = m.nets.len() + 1;
        for _ in 0..=limit {
            let before = self.vals.clone();
            for a in &m.assigns {
                let writes = eval::assignment(
                    &Ctx {
                        nets: &m.nets,
                        vals: &self.vals,
                    },
                    &a.lhs,
                    &a.expr,
                )?;
                writes.iter().for_each(|w| eval::apply(&mut self.vals, w));
            }
            for b in &m.always_blocks {
                if b.trigger == Trigger::Combinational {
                    let mut nba = Vec::new();
                    eval::exec(&b.body, &m.nets, &mut self.vals, &mut nba)?;
                    nba.iter().for_each(|w| eval::apply(&mut self.vals, w));
                }
            }
            if self.vals == before {
                return Ok(());
            }
        }
        let next = self.after_one_round();
        let moving: Vec<NetId> = (0..m.nets.len()).filter(|&i| self.vals[i] != next[i]).collect();
        let deps = comb_dependencies(m);
        let culprit = moving
            .iter()
            .find(|&&n| on_cycle(&deps, n))
            .or(moving.first())
            .map(|&i| m.nets[i].name.clone())
            .unwrap_or_default();
        Err(EvalError::CombinationalLoop(culprit))
    }

    /// State after one more evaluation round (loop diagnostics).
    fn after_one_round(&self) -> Values {
        let m = self.module;
        let mut vals = self.vals.clone();
        for a in &m.assigns {
            if let Ok(ws) = eval::assignment(
                &Ctx {
                    nets: &m.nets,
                    vals: &vals,
                },
                &a.lhs,
                &a.expr,
            ) {
                ws.iter().for_each(|w| eval::apply(&mut vals, w));
            }
        }
        for b in &m.always_blocks {
            if b.trigger == Trigger::Combinational {
                let mut nba: Vec<Write> = Vec::new();
                let _ = eval::exec(&b.body, &m.nets, &mut vals, &mut nba);
                nba.iter().for_each(|w| eval::apply(&mut vals, w));
            }
        }
        vals
    }

    /// Settles, then fires edge-triggered blocks until no edges remain.
    pub fn propagate(&mut self) -> Result<(), EvalError> {
        let m = self.module;
        for _ in 0..MAX_DELTAS {
            self.settle()?;
            let mut rose = Vec::new();
            let mut fell = Vec::new();
            for (net, last) in self.prev.iter_mut() {
                let now = self.vals[*net][0] & 1;
                if now != *last {
                    if now == 1 {
                        rose.push(*net);
                    } else {
                        fell.push(*net);
                    }
                    *last = now;
                }
            }
            if rose.is_empty() && fell.is_empty() {
                return Ok(());
            }
            let mut nba = Vec::new();
            for b in &m.always_blocks {
                let Trigger::Edges(edges) = &b.trigger else {
                    continue;
                };
                let fire = edges.iter().any(|(e, n)| match e {
                    Edge::Posedge => rose.contains(n),
                    Edge::Negedge => fell.contains(n),
                });
                if fire {
                    eval::exec(&b.body, &m.nets, &mut self.vals, &mut nba)?;
                }
            }
            nba.iter().for_each(|w| eval::apply(&mut self.vals, w));
        }
        Err(EvalError::LoopBound(MAX_DELTAS))
    }

    /// One full clock cycle: drive `clk` low, propagate, drive it high,
    /// propagate.
    pub fn clock_edge(&mut self, clk: &str) -> Result<(), EvalError> {
        self.set_input(clk, BitVector::zero(1), false)?;
        self.propagate()?;
        self.set_input(clk, BitVector::new(1, 1), false)?;
        self.propagate()
    }
}

/// For each net, the nets its combinational drivers read.
fn comb_dependencies(m: &ModuleAst) -> Vec<Vec<NetId>> {
    let mut deps = vec![Vec::new(); m.nets.len()];
    for a in &m.assigns {
        let (mut lhs, mut rhs) = (Vec::new(), Vec::new());
        a.lhs.nets(&mut lhs);
        a.lhs.index_reads(&mut rhs);
        a.expr.nets(&mut rhs);
        for l in lhs {
            deps[l].extend(&rhs);
        }
    }
    for b in &m.always_blocks {
        if b.trigger == Trigger::Combinational {
            let (mut w, mut r) = (Vec::new(), Vec::new());
            b.body.writes(&mut w);
            b.body.reads(&mut r);
            for t in w {
                deps[t].extend(&r);
            }
        }
    }
    deps
}

fn on_cycle(deps: &[Vec<NetId>], start: NetId) -> bool {
    let mut seen = vec![false; deps.len()];
    let mut stack = deps[start].clone();
    while let Some(n) = stack.pop() {
        if n == start {
            return true;
        }
        if !std::mem::replace(&mut seen[n], true) {
            stack.extend(&deps[n]);
        }
    }
    false
}

/// Evaluates a purely combinational module on one input assignment.
pub fn eval_combinational(
    ast: &ModuleAst,
    inputs: &BTreeMap<String, BitVector>,
) -> Result<BTreeMap<String, BitVector>, EvalError> {
    if classify_circuit(ast) == CircuitKind::Sequential {
        return Err(EvalError::NotCombinational);
    }
    let mut sim = Simulator::new(ast)?;
    for name in inputs.keys() {
        if ast.port(name).is_none_or(|p| p.dir != PortDir::Input) {
            return Err(EvalError::UnknownPort(name.clone()));
        }
    }
    for p in ast.inputs() {
        let v = inputs
            .get(&p.name)
            .ok_or_else(|| EvalError::MissingInput(p.name.clone()))?;
        sim.set_input(&p.name, *v, true)?;
    }
    sim.settle()?;
    Ok(ast
        .outputs()
        .map(|p| (p.name.clone(), BitVector::new(p.width, sim.vals[p.net][0])))
        .collect())
}

/// A testbench: stimulus vectors for the internal simulator, or Verilog
/// text for an external one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TestbenchSpec {
    Vectors {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        clock: Option<String>,
        steps: Vec<VectorStep>,
    },
    Verilog {
        source: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorStep {
    #[serde(default)]
    pub apply: BTreeMap<String, BitVector>,
    /// Rising clock edges to run after applying inputs.
    #[serde(default)]
    pub after: u64,
    /// Expected values; unknown bits in an expectation are don't-cares.
    #[serde(default)]
    pub expect: BTreeMap<String, BitVector>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    /// Rising edges completed when the check ran.
    pub cycle: u64,
    pub step: usize,
    pub signal: String,
    pub expected: BitVector,
    pub got: BitVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRun {
    pub passed: bool,
    pub failures: Vec<Failure>,
    pub cycles: u64,
}

impl TestbenchSpec {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        serde_json::from_str(text).map_err(|e| SimError::ParseError(e.to_string()))
    }
}

fn find_clock(dut: &ModuleAst, named: Option<&str>) -> Option<String> {
    if let Some(n) = named {
        return dut.port(n).filter(|p| p.dir == PortDir::Input).map(|p| p.name.clone());
    }
    for cand in ["clk", "clock", "CLK"] {
        if dut.port(cand).is_some_and(|p| p.dir == PortDir::Input) {
            return Some(cand.to_string());
        }
    }
    let mut posedge_inputs: Vec<&str> = dut
        .always_blocks
        .iter()
        .filter_map(|b| match &b.trigger {
            Trigger::Edges(es) => Some(es),
            Trigger::Combinational => None,
        })
        .flatten()
        .filter(|(e, _)| *e == Edge::Posedge)
        .map(|(_, n)| dut.nets[*n].name.as_str())
        .filter(|n| dut.port(n).is_some_and(|p| p.dir == PortDir::Input && p.width == 1))
        .collect();
    posedge_inputs.sort_unstable();
    posedge_inputs.dedup();
    (posedge_inputs.len() == 1).then(|| posedge_inputs[0].to_string())
}

/// Runs a vector testbench on the internal simulator.
pub fn run_testbench(dut: &ModuleAst, tb: &TestbenchSpec, max_cycles: u64) -> Result<TestRun, SimError> {
    let (clock, steps) = match tb {
        TestbenchSpec::Vectors { clock, steps } => (clock.as_deref(), steps),
        TestbenchSpec::Verilog { .. } => {
            return Err(SimError::ExternalToolUnavailable(
                "Verilog testbenches need an external simulator".into(),
            ))
        }
    };
    let mut sim = Simulator::new(dut)?;
    let needs_clock = steps.iter().any(|s| s.after > 0);
    let clk = find_clock(dut, clock);
    if needs_clock && clk.is_none() {
        return Err(SimError::ParseError(match clock {
            Some(c) => format!("clock `{c}` is not an input of `{}`", dut.name),
            None => format!("testbench requests clock edges but `{}` has no clock input", dut.name),
        }));
    }
    let mut cycles = 0u64;
    let mut failures = Vec::new();
    for (i, step) in steps.iter().enumerate() {
        for (name, v) in &step.apply {
            sim.set_input(name, *v, false)?;
        }
        sim.propagate()?;
        for _ in 0..step.after {
            cycles += 1;
            if cycles > max_cycles {
                return Err(SimError::SimTimeout(max_cycles));
            }
            sim.clock_edge(clk.as_deref().unwrap())?;
        }
        for (name, expected) in &step.expect {
            let got = sim.get(name).ok_or_else(|| SimError::UnknownSignal(name.clone()))?;
            let care = expected.known_mask();
            let over = expected.bits() & !mask(got.width()) != 0;
            if over || (got.bits() ^ expected.bits()) & care & mask(got.width()) != 0 {
                failures.push(Failure {
                    cycle: cycles,
                    step: i,
                    signal: name.clone(),
                    expected: *expected,
                    got,
                });
            }
        }
    }
    Ok(TestRun {
        passed: failures.is_empty(),
        failures,
        cycles,
    })
}
