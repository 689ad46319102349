//! Syntax checking through the internal parser or an external tool.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::external::{self, SimConfig};
use super::sim::SimError;
use super::{Diagnostic, Severity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Checker {
    Internal,
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SyntaxMode {
    Internal,
    External,
    #[default]
    Auto,
}

impl FromStr for SyntaxMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "internal" => Ok(SyntaxMode::Internal),
            "external" => Ok(SyntaxMode::External),
            "auto" => Ok(SyntaxMode::Auto),
            other => Err(format!("unknown syntax mode `{other}` (internal|external|auto)")),
        }
    }
}

impl fmt::Display for SyntaxMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SyntaxMode::Internal => "internal",
            SyntaxMode::External => "external",
            SyntaxMode::Auto => "auto",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntaxReport {
    pub ok: bool,
    pub diagnostics: Vec<Diagnostic>,
    pub checker: Checker,
}

impl SyntaxReport {
    fn new(diagnostics: Vec<Diagnostic>, checker: Checker) -> Self {
        SyntaxReport {
            ok: !diagnostics.iter().any(|d| d.severity == Severity::Error),
            diagnostics,
            checker,
        }
    }
}

pub fn check_syntax_internal(text: &str) -> SyntaxReport {
    let diagnostics = match super::parse(text) {
        Ok(parsed) => parsed.warnings,
        Err(errors) => errors,
    };
    SyntaxReport::new(diagnostics, Checker::Internal)
}

/// Checks `text`. `Auto` uses the external tool when one is configured.
pub fn check_syntax(text: &str, mode: SyntaxMode, sim: &SimConfig) -> Result<SyntaxReport, SimError> {
    let external = match mode {
        SyntaxMode::Internal => false,
        SyntaxMode::External => {
            if !sim.is_configured() {
                return Err(SimError::ExternalToolUnavailable("no `sim.cmd` configured".into()));
            }
            true
        }
        SyntaxMode::Auto => sim.is_configured(),
    };
    if external {
        let diags = external::check_syntax_external(text, sim)?;
        Ok(SyntaxReport::new(diags, Checker::External))
    } else {
        Ok(check_syntax_internal(text))
    }
}
