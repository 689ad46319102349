//! Per-stage provenance: hashes of inputs and outputs, the config hash and
//! the seed, plus a run-level index and chain validation.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

use crate::util::{sha256_hex, write_atomic};

pub const MANIFEST_FILE: &str = "manifest.json";
/// Prefix for inputs that live outside the run directory.
pub const EXTERNAL: &str = "external:";

/// Canonical stage order of a full pipeline run.
pub const STAGE_ORDER: &[&str] = &[
    "ingest",
    "score-train",
    "score-run",
    "synth",
    "filter",
    "export-sft",
    "rag-ingest/example",
    "rag-ingest/knowledge",
    "rag-mine/example",
    "rag-mine/knowledge",
    "rag-train/example",
    "rag-train/knowledge",
    "eval",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    /// Run-relative path with `/` separators, or `external:<name>`.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageManifest {
    pub stage: String,
    pub tool_version: String,
    pub seed: u64,
    pub config_hash: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageEntry {
    pub stage: String,
    pub manifest: String,
    pub sha256: String,
}

/// Index of every stage manifest in a run directory.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub stages: Vec<StageEntry>,
}

fn rel(run_dir: &Path, p: &Path) -> String {
    p.strip_prefix(run_dir)
        .unwrap_or(p)
        .components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

/// Digest of a file, or of a directory tree as the hash over its sorted
/// `relative-path NUL file-hash NL` lines.
pub fn digest_path(p: &Path) -> io::Result<(String, u64)> {
    if p.is_file() {
        let b = fs::read(p)?;
        return Ok((sha256_hex(&b), b.len() as u64));
    }
    let mut entries = Vec::new();
    for e in WalkDir::new(p).follow_links(false).sort_by_file_name() {
        let e = e.map_err(io::Error::other)?;
        if e.file_type().is_file() {
            let b = fs::read(e.path())?;
            entries.push((rel(p, e.path()), sha256_hex(&b), b.len() as u64));
        }
    }
    entries.sort();
    let mut h = Sha256::new();
    let mut total = 0;
    for (r, s, n) in entries {
        h.update(r.as_bytes());
        h.update([0]);
        h.update(s.as_bytes());
        h.update(b"\n");
        total += n;
    }
    Ok((hex::encode(h.finalize()), total))
}

impl FileDigest {
    pub fn of_run_file(run_dir: &Path, p: &Path) -> io::Result<FileDigest> {
        let (sha256, bytes) = digest_path(p)?;
        Ok(FileDigest {
            path: rel(run_dir, p),
            sha256,
            bytes,
        })
    }

    pub fn of_external(name: &str, p: &Path) -> io::Result<FileDigest> {
        let (sha256, bytes) = digest_path(p)?;
        Ok(FileDigest {
            path: format!("{EXTERNAL}{name}"),
            sha256,
            bytes,
        })
    }
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> io::Result<()> {
    let mut s = serde_json::to_string_pretty(v).map_err(io::Error::other)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> io::Result<T> {
    serde_json::from_slice(&fs::read(path)?)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("{}: {e}", path.display())))
}

impl StageManifest {
    pub fn path(run_dir: &Path, stage: &str) -> PathBuf {
        run_dir.join(stage).join(MANIFEST_FILE)
    }

    /// Writes the stage manifest and records it in the run index.
    pub fn write(&self, run_dir: &Path) -> io::Result<()> {
        let p = Self::path(run_dir, &self.stage);
        write_json(&p, self)?;
        let (sha256, _) = digest_path(&p)?;
        let mut run = RunManifest::load(run_dir).unwrap_or_default();
        run.stages.retain(|e| e.stage != self.stage);
        run.stages.push(StageEntry {
            stage: self.stage.clone(),
            manifest: rel(run_dir, &p),
            sha256,
        });
        let rank = |s: &str| STAGE_ORDER.iter().position(|x| *x == s).unwrap_or(usize::MAX);
        run.stages
            .sort_by(|a, b| rank(&a.stage).cmp(&rank(&b.stage)).then_with(|| a.stage.cmp(&b.stage)));
        write_json(&run_dir.join(MANIFEST_FILE), &run)
    }

    pub fn load(run_dir: &Path, stage: &str) -> io::Result<StageManifest> {
        read_json(&Self::path(run_dir, stage))
    }
}

impl RunManifest {
    pub fn load(run_dir: &Path) -> io::Result<RunManifest> {
        read_json(&run_dir.join(MANIFEST_FILE))
    }
}

/// One line of provenance per stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainLink {
    pub stage: String,
    /// Run artifacts consumed, each with the stage that produced it.
    pub consumes: Vec<(String, String)>,
    pub external: Vec<String>,
    pub outputs: Vec<String>,
}

/// Checks that every stage manifest, output and consumed artifact still has
/// the recorded hash and that each run-internal input was produced by an
/// earlier stage. Returns the provenance chain or every problem found.
pub fn validate_chain(run_dir: &Path) -> Result<Vec<ChainLink>, Vec<String>> {
    let run = RunManifest::load(run_dir).map_err(|e| vec![format!("run manifest: {e}")])?;
    let mut problems = Vec::new();
    let mut produced: BTreeMap<String, (String, String)> = BTreeMap::new();
    let mut chain = Vec::new();
    for entry in &run.stages {
        let mp = run_dir.join(&entry.manifest);
        match digest_path(&mp) {
            Ok((h, _)) if h == entry.sha256 => {}
            Ok(_) => problems.push(format!("{}: manifest changed since it was indexed", entry.manifest)),
            Err(e) => {
                problems.push(format!("{}: {e}", entry.manifest));
                continue;
            }
        }
        let m: StageManifest = match read_json(&mp) {
            Ok(m) => m,
            Err(e) => {
                problems.push(e.to_string());
                continue;
            }
        };
        let mut link = ChainLink {
            stage: m.stage.clone(),
            consumes: Vec::new(),
            external: Vec::new(),
            outputs: Vec::new(),
        };
        for i in &m.inputs {
            if let Some(name) = i.path.strip_prefix(EXTERNAL) {
                link.external.push(name.to_string());
                continue;
            }
            match produced.get(&i.path) {
                Some((stage, h)) if *h == i.sha256 => link.consumes.push((i.path.clone(), stage.clone())),
                Some((stage, _)) => problems.push(format!(
                    "{}: input {} differs from what {stage} produced",
                    m.stage, i.path
                )),
                None => problems.push(format!(
                    "{}: input {} was not produced by an earlier stage",
                    m.stage, i.path
                )),
            }
        }
        for o in &m.outputs {
            match digest_path(&run_dir.join(&o.path)) {
                Ok((h, _)) if h == o.sha256 => {}
                Ok(_) => problems.push(format!("{}: output {} was modified", m.stage, o.path)),
                Err(e) => problems.push(format!("{}: output {}: {e}", m.stage, o.path)),
            }
            produced.insert(o.path.clone(), (m.stage.clone(), o.sha256.clone()));
            link.outputs.push(o.path.clone());
        }
        chain.push(link);
    }
    if problems.is_empty() {
        Ok(chain)
    } else {
        Err(problems)
    }
}
