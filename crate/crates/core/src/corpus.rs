//! Corpus scanning, module segmentation and deduplication.

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::util::sha256_hex;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum CorpusError {
    #[error("cannot read {path}: {message}")]
    IoError { path: String, message: String },
    #[error("module `{name}` starting at line {line} has no matching `endmodule`")]
    UnterminatedModule { name: String, line: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceFile {
    /// Path relative to the corpus root, `/`-separated.
    pub path: String,
    pub text: String,
    pub byte_len: usize,
    /// Set when the file was not valid UTF-8 and was decoded lossily.
    pub lossy: bool,
}

impl SourceFile {
    pub fn from_bytes(path: impl Into<String>, bytes: &[u8]) -> Self {
        let (text, lossy) = match std::str::from_utf8(bytes) {
            Ok(t) => (t.to_string(), false),
            Err(_) => (String::from_utf8_lossy(bytes).into_owned(), true),
        };
        SourceFile {
            path: path.into(),
            byte_len: text.len(),
            text,
            lossy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerilogModuleChunk {
    pub id: String,
    pub source: String,
    pub module_name: String,
    pub text: String,
    pub line_start: usize,
    pub line_end: usize,
}

impl VerilogModuleChunk {
    pub fn line_span(&self) -> (usize, usize) {
        (self.line_start, self.line_end)
    }
}

#[derive(Debug, Default)]
pub struct ScanResult {
    pub files: Vec<SourceFile>,
    pub errors: Vec<CorpusError>,
}

pub fn default_extensions() -> BTreeSet<String> {
    [".v".to_string()].into_iter().collect()
}

/// Reads every file under `root` whose name ends with one of `extensions`,
/// sorted by relative path. Unreadable entries are reported and skipped.
pub fn scan_corpus(root: &Path, extensions: &BTreeSet<String>) -> Result<ScanResult, CorpusError> {
    let meta = fs::metadata(root).map_err(|e| CorpusError::IoError {
        path: root.display().to_string(),
        message: e.to_string(),
    })?;
    if !meta.is_dir() {
        return Err(CorpusError::IoError {
            path: root.display().to_string(),
            message: "not a directory".into(),
        });
    }
    let mut errors = Vec::new();
    let mut paths: Vec<(String, PathBuf)> = Vec::new();
    for entry in walkdir::WalkDir::new(root).follow_links(false) {
        let entry = match entry {
            Ok(e) => e,
            Err(e) => {
                let path = e
                    .path()
                    .map(|p| rel_path(root, p))
                    .unwrap_or_else(|| root.display().to_string());
                errors.push(CorpusError::IoError {
                    path,
                    message: e.to_string(),
                });
                continue;
            }
        };
        if entry.file_type().is_dir() {
            continue;
        }
        let name = entry.file_name().to_string_lossy();
        if extensions.iter().any(|ext| name.ends_with(ext.as_str())) {
            paths.push((rel_path(root, entry.path()), entry.path().to_path_buf()));
        }
    }
    paths.sort();
    let read: Vec<Result<SourceFile, CorpusError>> = paths
        .par_iter()
        .map(|(rel, full)| match fs::read(full) {
            Ok(bytes) => Ok(SourceFile::from_bytes(rel.clone(), &bytes)),
            Err(e) => Err(CorpusError::IoError {
                path: rel.clone(),
                message: e.to_string(),
            }),
        })
        .collect();
    let mut files = Vec::new();
    for r in read {
        match r {
            Ok(f) => files.push(f),
            Err(e) => errors.push(e),
        }
    }
    Ok(ScanResult { files, errors })
}

fn rel_path(root: &Path, p: &Path) -> String {
    let rel = p.strip_prefix(root).unwrap_or(p);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

/// Collapses space/tab runs to one space, strips leading and trailing
/// whitespace on each line, and normalizes line endings; newlines are kept.
pub fn normalize_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for (i, line) in text.replace("\r\n", "\n").split('\n').enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let mut pending_space = false;
        for c in line.trim_matches([' ', '\t', '\r']).chars() {
            if c == ' ' || c == '\t' {
                pending_space = true;
            } else {
                if pending_space {
                    out.push(' ');
                    pending_space = false;
                }
                out.push(c);
            }
        }
    }
    out
}

/// Content id: hex of the first 128 bits of SHA-256 over the normalized text.
pub fn chunk_id(text: &str) -> String {
    sha256_hex(normalize_whitespace(text).as_bytes())[..32].to_string()
}

fn is_ident_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_'
}

fn is_ident_char(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'$'
}

/// Identifier-like words of `text` outside comments and strings, with byte
/// offsets and line numbers.
struct Words<'a> {
    bytes: &'a [u8],
    pos: usize,
    line: usize,
}

#[derive(Debug, Clone, Copy)]
struct Word<'a> {
    text: &'a str,
    start: usize,
    end: usize,
    line: usize,
}

impl<'a> Iterator for Words<'a> {
    type Item = Word<'a>;

    fn next(&mut self) -> Option<Word<'a>> {
        let b = self.bytes;
        while self.pos < b.len() {
            let c = b[self.pos];
            match c {
                b'\n' => {
                    self.line += 1;
                    self.pos += 1;
                }
                b'/' if b.get(self.pos + 1) == Some(&b'/') => {
                    while self.pos < b.len() && b[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b'/' if b.get(self.pos + 1) == Some(&b'*') => {
                    self.pos += 2;
                    while self.pos < b.len() && !(b[self.pos] == b'*' && b.get(self.pos + 1) == Some(&b'/')) {
                        if b[self.pos] == b'\n' {
                            self.line += 1;
                        }
                        self.pos += 1;
                    }
                    self.pos = (self.pos + 2).min(b.len());
                }
                b'"' => {
                    self.pos += 1;
                    while self.pos < b.len() && b[self.pos] != b'"' && b[self.pos] != b'\n' {
                        if b[self.pos] == b'\\' {
                            self.pos += 1;
                        }
                        self.pos += 1;
                    }
                    if b.get(self.pos) == Some(&b'"') {
                        self.pos += 1;
                    }
                }
                b'\\' => {
                    // Escaped identifier: runs to the next whitespace.
                    let start = self.pos;
                    while self.pos < b.len() && !b[self.pos].is_ascii_whitespace() {
                        self.pos += 1;
                    }
                    return Some(Word {
                        text: std::str::from_utf8(&b[start..self.pos]).unwrap_or(""),
                        start,
                        end: self.pos,
                        line: self.line,
                    });
                }
                _ if is_ident_start(c) || c == b'`' || c == b'$' => {
                    let start = self.pos;
                    self.pos += 1;
                    while self.pos < b.len() && is_ident_char(b[self.pos]) {
                        self.pos += 1;
                    }
                    return Some(Word {
                        text: std::str::from_utf8(&b[start..self.pos]).unwrap_or(""),
                        start,
                        end: self.pos,
                        line: self.line,
                    });
                }
                _ if c.is_ascii_digit() => {
                    while self.pos < b.len() && is_ident_char(b[self.pos]) {
                        self.pos += 1;
                    }
                }
                _ => self.pos += 1,
            }
        }
        None
    }
}

/// Splits a file into `module … endmodule` chunks in source order. Nested
/// declarations stay inside their outermost module. A missing `endmodule`
/// is reported alongside the chunks completed before it.
pub fn segment_modules(file: &SourceFile) -> (Vec<VerilogModuleChunk>, Option<CorpusError>) {
    let text = &file.text;
    let mut words = Words {
        bytes: text.as_bytes(),
        pos: 0,
        line: 1,
    }
    .peekable();
    let mut chunks = Vec::new();
    let mut depth = 0usize;
    let mut open: Option<(usize, usize, String)> = None;
    while let Some(w) = words.next() {
        match w.text {
            "module" | "macromodule" => {
                if depth == 0 {
                    let Some(name) = words.peek().map(|n| n.text) else {
                        break;
                    };
                    if !crate::verilog::lexer::is_identifier(name) {
                        continue;
                    }
                    open = Some((w.start, w.line, name.to_string()));
                }
                depth += 1;
            }
            "endmodule" if depth > 0 => {
                depth -= 1;
                if depth == 0 {
                    let (start, line_start, name) = open.take().unwrap();
                    let body = &text[start..w.end];
                    chunks.push(VerilogModuleChunk {
                        id: chunk_id(body),
                        source: file.path.clone(),
                        module_name: name,
                        text: body.to_string(),
                        line_start,
                        line_end: w.line,
                    });
                }
            }
            _ => {}
        }
    }
    let err = open.map(|(_, line, name)| CorpusError::UnterminatedModule { name, line });
    (chunks, err)
}

/// Keeps the first chunk per id, preserving order.
pub fn dedupe(chunks: Vec<VerilogModuleChunk>) -> Vec<VerilogModuleChunk> {
    let mut seen = HashSet::new();
    chunks.into_iter().filter(|c| seen.insert(c.id.clone())).collect()
}

#[derive(Debug, Default, Serialize)]
pub struct IngestReport {
    pub files: usize,
    pub lossy_files: Vec<String>,
    pub chunks_before_dedupe: usize,
    pub chunks: usize,
    pub errors: Vec<CorpusError>,
}

/// Scan, segment (in parallel, path order preserved) and dedupe.
pub fn ingest(
    root: &Path,
    extensions: &BTreeSet<String>,
) -> Result<(Vec<VerilogModuleChunk>, IngestReport), CorpusError> {
    let scan = scan_corpus(root, extensions)?;
    let segmented: Vec<_> = scan.files.par_iter().map(segment_modules).collect();
    let mut report = IngestReport {
        files: scan.files.len(),
        lossy_files: scan.files.iter().filter(|f| f.lossy).map(|f| f.path.clone()).collect(),
        errors: scan.errors,
        ..Default::default()
    };
    let mut all = Vec::new();
    for (chunks, err) in segmented {
        all.extend(chunks);
        report.errors.extend(err);
    }
    report.chunks_before_dedupe = all.len();
    let out = dedupe(all);
    report.chunks = out.len();
    Ok((out, report))
}
