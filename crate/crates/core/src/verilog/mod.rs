//! Verilog front end: lexer, subset parser, evaluator, simulator and the
//! external-simulator adapter.

pub mod ast;
mod elaborate;
pub mod eval;
pub mod external;
pub mod lexer;
mod parser;
pub mod sim;
pub mod syntax;
pub mod value;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use ast::{ModuleAst, SourceUnit};
pub use eval::EvalError;
pub use external::SimConfig;
pub use sim::{
    classify_circuit, eval_combinational, run_testbench, CircuitKind, SimError, Simulator, TestRun, TestbenchSpec,
    VectorStep, DEFAULT_MAX_CYCLES,
};
pub use syntax::{check_syntax, check_syntax_internal, Checker, SyntaxMode, SyntaxReport};
pub use value::BitVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub line: usize,
    pub message: String,
    pub code: String,
    pub severity: Severity,
}

impl Diagnostic {
    pub fn error(line: usize, code: &str, message: impl Into<String>) -> Self {
        Diagnostic {
            line,
            message: message.into(),
            code: code.to_string(),
            severity: Severity::Error,
        }
    }

    pub fn warning(line: usize, code: &str, message: impl Into<String>) -> Self {
        Diagnostic {
            line,
            message: message.into(),
            code: code.to_string(),
            severity: Severity::Warning,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "line {}: {sev} [{}]: {}", self.line, self.code, self.message)
    }
}

/// A parsed source file with its non-fatal diagnostics.
#[derive(Debug, Clone)]
pub struct Parsed {
    pub unit: SourceUnit,
    pub warnings: Vec<Diagnostic>,
}

/// Lexes and parses every module in `text`.
pub fn parse(text: &str) -> Result<Parsed, Vec<Diagnostic>> {
    let tokens = lexer::lex(text).map_err(|e| vec![Diagnostic::error(e.line, "E-LEX", e.message)])?;
    let (unit, warnings) = parser::parse_tokens(tokens)?;
    Ok(Parsed { unit, warnings })
}

/// Flattens the hierarchy under module `top`.
pub fn elaborate(unit: &SourceUnit, top: &str) -> Result<ModuleAst, Diagnostic> {
    elaborate::flatten(unit, top)
}

/// Parses `text` and returns its top module (or `top` if given), flattened.
pub fn parse_design(text: &str, top: Option<&str>) -> Result<ModuleAst, Vec<Diagnostic>> {
    let parsed = parse(text)?;
    let name = match top {
        Some(t) => t.to_string(),
        None => parsed.unit.top().map(|m| m.name.clone()).unwrap_or_default(),
    };
    elaborate(&parsed.unit, &name).map_err(|d| vec![d])
}
