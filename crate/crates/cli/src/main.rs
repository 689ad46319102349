use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use vcoder_core::config::{load_config, LoadedConfig, Overrides};
use vcoder_core::corpus::{default_extensions, ingest};
use vcoder_core::evalkit::{import_rtllm, import_verilogeval, read_report, render_summary};
use vcoder_core::manifest::validate_chain;
use vcoder_core::pipeline::{query_store, run_pipeline, run_stage_with, EvalOptions, PipelineError};
use vcoder_core::rag::ChunkKind;
use vcoder_core::util::write_jsonl;
use vcoder_core::verilog::{check_syntax, SimConfig, SyntaxMode};

#[derive(Parser)]
#[command(
    name = "vcoder",
    version,
    about = "Verilog dataset, retrieval and evaluation pipeline"
)]
struct Cli {
    /// Pipeline config file.
    #[arg(long, global = true, default_value = "config/default.toml")]
    config: PathBuf,
    /// Override the config's global seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the config's run directory.
    #[arg(long, global = true)]
    run_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Example,
    Knowledge,
}

impl From<KindArg> for ChunkKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Example => ChunkKind::Example,
            KindArg::Knowledge => ChunkKind::Knowledge,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskFormat {
    Verilogeval,
    Rtllm,
}

#[derive(Subcommand)]
enum Command {
    /// Extract and deduplicate modules from the corpus. With `--root`, runs
    /// outside any run directory and writes chunks to `--out`.
    Ingest {
        #[arg(long, requires = "out")]
        root: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated extensions, e.g. `.v,.sv`.
        #[arg(long, value_delimiter = ',')]
        ext: Option<Vec<String>>,
    },
    /// Collect LLM quality scores and train the scorer.
    ScoreTrain,
    /// Score every module and keep those above the threshold.
    ScoreRun {
        /// Override `scorer.threshold`; the comparison is strictly greater.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Generate problem/code pairs.
    Synth,
    /// Check synthetic pairs for syntax and function.
    Filter,
    /// Write the two fine-tuning datasets.
    ExportSft,
    /// Build a chunk store (both kinds when `--kind` is absent).
    RagIngest {
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
    },
    /// Mine contrastive pairs for retriever training.
    RagMine {
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
    },
    /// Train retrievers from mined pairs.
    RagTrain {
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
    },
    /// Show the top chunks for a query.
    RagQuery {
        query: String,
        #[arg(long, value_enum, default_value = "example")]
        kind: KindArg,
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// Run directory with the store and retriever; the configured run by default.
        #[arg(long)]
        rag: Option<PathBuf>,
    },
    /// Run the benchmark and report pass@k.
    Eval {
        #[arg(long)]
        tasks: Option<PathBuf>,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long, value_delimiter = ',')]
        k: Option<Vec<u64>>,
        /// Run directory holding trained retrievers.
        #[arg(long)]
        rag: Option<PathBuf>,
        /// Evaluate without retrieval.
        #[arg(long)]
        no_rag: bool,
        /// Also write the report here; `<run_dir>/eval/report.json` is always written.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate the manifest chain and print provenance and results.
    Report,
    /// Run every stage in order.
    Pipeline,
    /// Convert a public benchmark to task JSONL.
    ImportTasks {
        #[arg(long, value_enum)]
        format: TaskFormat,
        /// VerilogEval JSONL file or RTLLM root directory.
        source: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check Verilog files with the built-in parser.
    SyntaxCheck { files: Vec<PathBuf> },
}

enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Config(_) => Failure::Validation(e.to_string()),
            PipelineError::Stage { .. } => Failure::Runtime(e.to_string()),
        }
    }
}

fn load(cli: &Cli) -> Result<LoadedConfig, Failure> {
    let threshold = match cli.command {
        Command::ScoreRun { threshold } => threshold,
        _ => None,
    };
    let ov = Overrides {
        seed: cli.seed,
        run_dir: cli.run_dir.clone(),
        threshold,
    };
    load_config(&cli.config, &ov).map_err(|e| Failure::Validation(e.to_string()))
}

fn kinds(lc: &LoadedConfig, kind: Option<KindArg>) -> Vec<ChunkKind> {
    match kind {
        Some(k) => vec![k.into()],
        None if lc.config.paths.docs.is_empty() => vec![ChunkKind::Example],
        None => vec![ChunkKind::Example, ChunkKind::Knowledge],
    }
}

fn stage(lc: &LoadedConfig, name: &str) -> Result<(), Failure> {
    let m = run_stage_with(lc, name, &EvalOptions::default())?;
    println!("{}: {} outputs", m.stage, m.outputs.len());
    Ok(())
}

fn per_kind(lc: &LoadedConfig, prefix: &str, kind: Option<KindArg>) -> Result<(), Failure> {
    for k in kinds(lc, kind) {
        stage(lc, &format!("{prefix}/{k}"))?;
    }
    Ok(())
}

fn report(run_dir: &Path) -> Result<(), Failure> {
    let chain = validate_chain(run_dir)
        .map_err(|problems| Failure::Validation(format!("manifest chain invalid:\n  {}", problems.join("\n  "))))?;
    for link in &chain {
        println!("{}", link.stage);
        for name in &link.external {
            println!("  <- external {name}");
        }
        for (path, from) in &link.consumes {
            println!("  <- {path} ({from})");
        }
        for o in &link.outputs {
            println!("  -> {o}");
        }
    }
    println!("manifest chain ok: {} stages", chain.len());
    let eval = run_dir.join("eval/report.json");
    if eval.is_file() {
        let r = read_report(&eval).map_err(|e| Failure::Runtime(format!("{}: {e}", eval.display())))?;
        print!("\n{}", render_summary(&r.summary));
    }
    Ok(())
}

fn ingest_standalone(root: &Path, out: &Path, ext: Option<&[String]>) -> Result<(), Failure> {
    if !root.is_dir() {
        return Err(Failure::Validation(format!(
            "--root: {} is not a directory",
            root.display()
        )));
    }
    let exts: BTreeSet<String> = match ext {
        Some(v) => v.iter().cloned().collect(),
        None => default_extensions(),
    };
    let (chunks, report) = ingest(root, &exts).map_err(|e| Failure::Runtime(e.to_string()))?;
    write_jsonl(out, &chunks).map_err(|e| Failure::Runtime(format!("{}: {e}", out.display())))?;
    println!(
        "{} modules from {} files written to {}",
        chunks.len(),
        report.files,
        out.display()
    );
    Ok(())
}

fn syntax_check(files: &[PathBuf]) -> Result<(), Failure> {
    let mut failed = 0;
    for f in files {
        let text = fs::read_to_string(f).map_err(|e| Failure::Runtime(format!("{}: {e}", f.display())))?;
        let r = check_syntax(&text, SyntaxMode::Internal, &SimConfig::default())
            .map_err(|e| Failure::Runtime(e.to_string()))?;
        for d in &r.diagnostics {
            println!("{}:{d}", f.display());
        }
        if r.ok {
            println!("{}: ok", f.display());
        } else {
            failed += 1;
        }
    }
    if failed > 0 {
        return Err(Failure::Validation(format!(
            "{failed} of {} files have syntax errors",
            files.len()
        )));
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::ImportTasks { format, source, out } => {
            let tasks = match format {
                TaskFormat::Verilogeval => import_verilogeval(source),
                TaskFormat::Rtllm => import_rtllm(source),
            }
            .map_err(|e| Failure::Validation(e.to_string()))?;
            write_jsonl(out, &tasks).map_err(|e| Failure::Runtime(format!("{}: {e}", out.display())))?;
            println!("wrote {} tasks to {}", tasks.len(), out.display());
            return Ok(());
        }
        Command::SyntaxCheck { files } => return syntax_check(files),
        Command::Ingest {
            root: Some(root),
            out: Some(out),
            ext,
        } => return ingest_standalone(root, out, ext.as_deref()),
        _ => {}
    }
    let lc = load(cli)?;
    match &cli.command {
        Command::Ingest { ext: Some(_), .. } => Err(Failure::Validation(
            "--ext applies with --root; set paths.extensions in the config instead".into(),
        )),
        Command::Ingest { .. } => stage(&lc, "ingest"),
        Command::ScoreTrain => stage(&lc, "score-train"),
        Command::ScoreRun { .. } => stage(&lc, "score-run"),
        Command::Synth => stage(&lc, "synth"),
        Command::Filter => stage(&lc, "filter"),
        Command::ExportSft => stage(&lc, "export-sft"),
        Command::RagIngest { kind } => per_kind(&lc, "rag-ingest", *kind),
        Command::RagMine { kind } => per_kind(&lc, "rag-mine", *kind),
        Command::RagTrain { kind } => per_kind(&lc, "rag-train", *kind),
        Command::RagQuery { query, kind, k, rag } => {
            let dir = rag.clone().unwrap_or_else(|| lc.config.paths.run_dir.clone());
            for (chunk, score) in query_store(&lc, &dir, (*kind).into(), query, *k)? {
                println!("{score:.4}\t{}\t{}", chunk.id, chunk.source);
            }
            Ok(())
        }
        Command::Eval {
            tasks,
            n,
            k,
            rag,
            no_rag,
            out,
        } => {
            let opts = EvalOptions {
                tasks: tasks.clone(),
                n: *n,
                ks: k.clone(),
                rag: rag.clone(),
                no_rag: *no_rag,
                out: out.clone(),
            };
            run_stage_with(&lc, "eval", &opts)?;
            print_eval_summary(&lc.config.paths.run_dir);
            Ok(())
        }
        Command::Report => report(&lc.config.paths.run_dir),
        Command::Pipeline => {
            let stages = run_pipeline(&lc)?;
            println!(
                "pipeline complete: {} stages in {}",
                stages.len(),
                lc.config.paths.run_dir.display()
            );
            print_eval_summary(&lc.config.paths.run_dir);
            Ok(())
        }
        Command::ImportTasks { .. } | Command::SyntaxCheck { .. } => unreachable!(),
    }
}

fn print_eval_summary(run_dir: &Path) {
    if let Ok(table) = fs::read_to_string(run_dir.join("eval/summary.txt")) {
        print!("{table}");
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
