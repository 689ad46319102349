use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use proptest::prelude::*;
use vcoder_core::corpus::{dedupe, default_extensions, ingest, scan_corpus, segment_modules, SourceFile};

fn exts(list: &[&str]) -> BTreeSet<String> {
    list.iter().map(|s| s.to_string()).collect()
}

fn module(name: &str, body_lines: usize) -> String {
    let mut s = format!("module {name} (\n    input  [3:0] a,\n    output [3:0] y\n);\n");
    for i in 0..body_lines {
        s.push_str(&format!("    wire [3:0] t{i} = a ^ 4'd{};\n", i % 16));
    }
    s.push_str("    assign y = a;\nendmodule\n");
    s
}

/// Text that mentions the keyword without declaring a module.
const DECOYS: &[&str] = &[
    "// module fake_line_comment(input a);\n",
    "/* module fake_block(input a);\n   endmodule */\n",
    "`define NAME \"module in a macro string\"\n",
    "wire module_count_w;\n",
];

#[test]
fn empty_directory_yields_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let scan = scan_corpus(dir.path(), &default_extensions()).unwrap();
    assert!(scan.files.is_empty());
    assert!(scan.errors.is_empty());
}

#[test]
fn extension_filter_and_order() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["c.v", "b.txt", "a.v"] {
        fs::write(dir.path().join(name), "module m; endmodule\n").unwrap();
    }
    let scan = scan_corpus(dir.path(), &default_extensions()).unwrap();
    let names: Vec<&str> = scan.files.iter().map(|f| f.path.as_str()).collect();
    assert_eq!(names, ["a.v", "c.v"]);

    let scan = scan_corpus(dir.path(), &exts(&[".v", ".txt"])).unwrap();
    assert_eq!(scan.files.len(), 3);
}

#[cfg(unix)]
#[test]
fn unreadable_entry_is_reported_and_skipped() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("good.v"), "module g; endmodule\n").unwrap();
    std::os::unix::fs::symlink(dir.path().join("missing-target"), dir.path().join("dangling.v")).unwrap();
    let scan = scan_corpus(dir.path(), &default_extensions()).unwrap();
    assert_eq!(scan.files.len(), 1);
    assert_eq!(scan.files[0].path, "good.v");
    assert_eq!(scan.errors.len(), 1);
    assert!(scan.errors[0].to_string().contains("dangling.v"));
}

#[test]
fn missing_root_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(scan_corpus(&dir.path().join("nope"), &default_extensions()).is_err());
}

/// 50 files with 173 modules planted by construction: files 0..23 hold four
/// modules, files 23..50 hold three, and every file carries keyword decoys.
fn write_173_fixture(root: &Path) -> usize {
    let mut planted = 0;
    for f in 0..50 {
        let n = if f < 23 { 4 } else { 3 };
        let mut text = String::new();
        for m in 0..n {
            text.push_str(DECOYS[(f + m) % DECOYS.len()]);
            text.push_str(&module(&format!("f{f}_m{m}"), 1 + (f * 3 + m) % 5));
            text.push('\n');
        }
        let sub = root.join(format!("d{}", f % 4));
        fs::create_dir_all(&sub).unwrap();
        fs::write(sub.join(format!("file{f:02}.v")), text).unwrap();
        planted += n;
    }
    planted
}

#[test]
fn fifty_file_fixture_has_173_modules() {
    let dir = tempfile::tempdir().unwrap();
    let planted = write_173_fixture(dir.path());
    assert_eq!(planted, 173);
    let (chunks, report) = ingest(dir.path(), &default_extensions()).unwrap();
    assert_eq!(report.files, 50);
    assert_eq!(report.chunks_before_dedupe, 173);
    assert_eq!(chunks.len(), 173);
    assert!(report.errors.is_empty());
    for c in &chunks {
        assert!(
            c.module_name.starts_with('f'),
            "decoy opened a chunk: {}",
            c.module_name
        );
        assert!(c.text.starts_with("module") && c.text.trim_end().ends_with("endmodule"));
    }
}

/// 163 distinct modules plus 37 copies that differ only in indentation and
/// trailing spaces, spread over 20 files.
#[test]
fn planted_duplicates_are_removed() {
    let dir = tempfile::tempdir().unwrap();
    let originals: Vec<String> = (0..163).map(|i| module(&format!("u{i}"), i % 7)).collect();
    let copies: Vec<String> = (0..37)
        .map(|j| {
            originals[(j * 4) % 163]
                .lines()
                .map(|l| format!("\t{}  ", l.replace("    ", "  ")))
                .collect::<Vec<_>>()
                .join("\n")
        })
        .collect();
    let mut all: Vec<&String> = originals.iter().collect();
    all.extend(copies.iter());
    assert_eq!(all.len(), 200);
    for (f, group) in all.chunks(10).enumerate() {
        let text: String = group.iter().map(|m| format!("{m}\n\n")).collect();
        fs::write(dir.path().join(format!("g{f:02}.v")), text).unwrap();
    }
    let (chunks, report) = ingest(dir.path(), &default_extensions()).unwrap();
    assert_eq!(report.chunks_before_dedupe, 200);
    assert_eq!(chunks.len(), 163);
    let names: Vec<String> = chunks.iter().map(|c| c.module_name.clone()).collect();
    let expect: Vec<String> = (0..163).map(|i| format!("u{i}")).collect();
    assert_eq!(names, expect, "first occurrence kept, order preserved");
}

fn arb_file() -> impl Strategy<Value = String> {
    prop::collection::vec((0usize..4, 0usize..6, any::<bool>()), 0..6).prop_map(|parts| {
        let mut s = String::new();
        for (i, (decoy, lines, blank)) in parts.into_iter().enumerate() {
            s.push_str(DECOYS[decoy]);
            s.push_str(&module(&format!("p{i}"), lines));
            if blank {
                s.push('\n');
            }
        }
        s
    })
}

proptest! {
    #[test]
    fn segmentation_is_idempotent_and_spans_increase(text in arb_file()) {
        let (chunks, err) = segment_modules(&SourceFile::from_bytes("p.v", text.as_bytes()));
        prop_assert!(err.is_none());
        let mut last_end = 0;
        for c in &chunks {
            prop_assert!(c.line_start > last_end);
            prop_assert!(c.line_end >= c.line_start);
            last_end = c.line_end;
            let (again, _) = segment_modules(&SourceFile::from_bytes("c.v", c.text.as_bytes()));
            prop_assert_eq!(again.len(), 1);
            prop_assert_eq!(&again[0].text, &c.text);
            prop_assert_eq!(&again[0].id, &c.id);
        }
    }

    #[test]
    fn dedupe_is_idempotent(text in arb_file(), dup in prop::collection::vec(0usize..6, 0..6)) {
        let (chunks, _) = segment_modules(&SourceFile::from_bytes("p.v", text.as_bytes()));
        let mut with_dups = chunks.clone();
        for d in dup {
            if let Some(c) = chunks.get(d) {
                with_dups.push(c.clone());
            }
        }
        let once = dedupe(with_dups);
        prop_assert_eq!(once.len(), chunks.len());
        prop_assert_eq!(dedupe(once.clone()), once);
    }
}
