//! Adapter for an external simulator driven by a shell command template.
//!
//! Templates may use `{dut}`, `{tb}` and `{out}`; each is replaced by a
//! shell-quoted path inside a fresh temporary workspace.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::LazyLock;
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};
use wait_timeout::ChildExt;

use super::sim::{SimError, TestRun};
use super::{Diagnostic, Severity};

pub const DEFAULT_PASS_SENTINEL: &str = "ALL TESTS PASSED";

fn default_sentinel() -> String {
    DEFAULT_PASS_SENTINEL.to_string()
}

fn default_timeout() -> u64 {
    30
}

/// External simulator settings (`[sim]` in the config file).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Compile-and-run template, e.g. `iverilog -o {out} {dut} {tb} && vvp {out}`.
    #[serde(default)]
    pub cmd: Option<String>,
    /// Compile-only template for syntax checks, e.g. `iverilog -o {out} {dut}`.
    /// Falls back to `cmd` with an empty testbench.
    #[serde(default)]
    pub syntax_cmd: Option<String>,
    #[serde(default = "default_sentinel")]
    pub pass_sentinel: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    /// Parent directory for temporary workspaces.
    #[serde(default)]
    pub work_dir: Option<PathBuf>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            cmd: None,
            syntax_cmd: None,
            pass_sentinel: default_sentinel(),
            timeout_secs: default_timeout(),
            work_dir: None,
        }
    }
}

impl SimConfig {
    pub fn is_configured(&self) -> bool {
        self.cmd.is_some() || self.syntax_cmd.is_some()
    }
}

#[derive(Debug)]
struct Outcome {
    success: bool,
    stdout: String,
    stderr: String,
}

fn shell_quote(p: &Path) -> String {
    format!("'{}'", p.display().to_string().replace('\'', r"'\''"))
}

fn run_template(cfg: &SimConfig, template: &str, dut: &str, tb: &str) -> Result<Outcome, SimError> {
    let dir = match &cfg.work_dir {
        Some(root) => {
            fs::create_dir_all(root).map_err(|e| SimError::External(e.to_string()))?;
            tempfile::Builder::new().prefix("sim-").tempdir_in(root)
        }
        None => tempfile::Builder::new().prefix("sim-").tempdir(),
    }
    .map_err(|e| SimError::External(format!("cannot create workspace: {e}")))?;
    let dut_path = dir.path().join("dut.v");
    let tb_path = dir.path().join("tb.v");
    let out_path = dir.path().join("sim.out");
    let io = |e: std::io::Error| SimError::External(e.to_string());
    fs::write(&dut_path, dut).map_err(io)?;
    fs::write(&tb_path, tb).map_err(io)?;
    let cmd = template
        .replace("{dut}", &shell_quote(&dut_path))
        .replace("{tb}", &shell_quote(&tb_path))
        .replace("{out}", &shell_quote(&out_path));
    let stdout_path = dir.path().join("stdout.txt");
    let stderr_path = dir.path().join("stderr.txt");
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(&cmd)
        .current_dir(dir.path())
        .stdin(Stdio::null())
        .stdout(fs::File::create(&stdout_path).map_err(io)?)
        .stderr(fs::File::create(&stderr_path).map_err(io)?)
        .spawn()
        .map_err(|e| SimError::ExternalToolUnavailable(format!("cannot spawn `sh`: {e}")))?;
    let status = match child.wait_timeout(Duration::from_secs(cfg.timeout_secs)).map_err(io)? {
        Some(s) => s,
        None => {
            let _ = child.kill();
            let _ = child.wait();
            return Err(SimError::External(format!(
                "simulator timed out after {} s",
                cfg.timeout_secs
            )));
        }
    };
    let read = |p: &Path| String::from_utf8_lossy(&fs::read(p).unwrap_or_default()).into_owned();
    let outcome = Outcome {
        success: status.success(),
        stdout: read(&stdout_path),
        stderr: read(&stderr_path),
    };
    // 127: the shell could not find the simulator binary.
    if status.code() == Some(127) {
        return Err(SimError::ExternalToolUnavailable(
            outcome.stderr.lines().next().unwrap_or("command not found").to_string(),
        ));
    }
    Ok(outcome)
}

static DIAG_LINE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[^:\s][^:]*:(\d+):\s*(.*)$").unwrap());

/// Parses `file:line: message` lines from tool output.
pub fn parse_diagnostics(output: &str) -> Vec<Diagnostic> {
    output
        .lines()
        .filter_map(|l| {
            let c = DIAG_LINE.captures(l.trim_end())?;
            let line: usize = c[1].parse().ok()?;
            let message = c[2].to_string();
            let warning = message.to_ascii_lowercase().starts_with("warning");
            Some(Diagnostic {
                line,
                code: if warning { "W-EXT" } else { "E-EXT" }.to_string(),
                message,
                severity: if warning { Severity::Warning } else { Severity::Error },
            })
        })
        .collect()
}

/// Compiles `text` with the external tool and collects its diagnostics.
pub fn check_syntax_external(text: &str, cfg: &SimConfig) -> Result<Vec<Diagnostic>, SimError> {
    let template = cfg
        .syntax_cmd
        .as_deref()
        .or(cfg.cmd.as_deref())
        .ok_or_else(|| SimError::ExternalToolUnavailable("no `sim.cmd` configured".into()))?;
    let out = run_template(cfg, template, text, "")?;
    let mut diags = parse_diagnostics(&out.stderr);
    diags.extend(parse_diagnostics(&out.stdout));
    if !out.success && !diags.iter().any(|d| d.severity == Severity::Error) {
        let first = out
            .stderr
            .lines()
            .chain(out.stdout.lines())
            .find(|l| !l.trim().is_empty())
            .unwrap_or("external checker failed")
            .to_string();
        diags.push(Diagnostic::error(0, "E-EXT", first));
    }
    Ok(diags)
}

/// Compiles and runs a Verilog testbench against `dut`. Passes iff the
/// command exits 0 and prints the sentinel line.
pub fn run_external_testbench(dut: &str, tb: &str, cfg: &SimConfig) -> Result<TestRun, SimError> {
    let template = cfg
        .cmd
        .as_deref()
        .ok_or_else(|| SimError::ExternalToolUnavailable("no `sim.cmd` configured".into()))?;
    let out = run_template(cfg, template, dut, tb)?;
    let sentinel = cfg.pass_sentinel.trim();
    let saw = out.stdout.lines().any(|l| l.trim() == sentinel);
    Ok(TestRun {
        passed: out.success && saw,
        failures: Vec::new(),
        cycles: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagnostics_from_tool_output() {
        let d =
            parse_diagnostics("dut.v:3: syntax error\n/tmp/x/dut.v:7: warning: implicit net\nnoise line\nI give up.\n");
        assert_eq!(d.len(), 2);
        assert_eq!(d[0].line, 3);
        assert_eq!(d[0].severity, Severity::Error);
        assert_eq!(d[1].line, 7);
        assert_eq!(d[1].severity, Severity::Warning);
    }

    #[test]
    fn fake_simulator_sentinel_and_exit_code() {
        let mut cfg = SimConfig {
            cmd: Some("cat {tb}".into()),
            ..SimConfig::default()
        };
        let run = run_external_testbench("", "ALL TESTS PASSED\n", &cfg).unwrap();
        assert!(run.passed);
        let run = run_external_testbench("", "3 failures\n", &cfg).unwrap();
        assert!(!run.passed);
        cfg.cmd = Some("cat {tb}; exit 1".into());
        let run = run_external_testbench("", "ALL TESTS PASSED\n", &cfg).unwrap();
        assert!(!run.passed);
    }

    #[test]
    fn missing_tool_is_unavailable() {
        let cfg = SimConfig {
            cmd: Some("definitely-not-a-simulator-xyz {dut}".into()),
            ..SimConfig::default()
        };
        assert!(matches!(
            run_external_testbench("", "", &cfg),
            Err(SimError::ExternalToolUnavailable(_))
        ));
    }

    #[test]
    fn timeout_is_reported() {
        let cfg = SimConfig {
            cmd: Some("sleep 5".into()),
            timeout_secs: 1,
            ..SimConfig::default()
        };
        assert!(matches!(
            run_external_testbench("", "", &cfg),
            Err(SimError::External(_))
        ));
    }
}
