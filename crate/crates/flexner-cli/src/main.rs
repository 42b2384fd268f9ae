//! Command-line frontend for the flexner recognizers.
//!
//! Four subcommands cover the artifact lifecycle: `build` compiles a
//! recognizer from gazetteer and lemma-table files, `annotate` emits matches
//! for a text, `eval` scores recognizers against an annotated corpus, and
//! `bench` measures throughput. Every output is machine-readable JSON (or
//! TSV where selected) on standard output; diagnostics go to standard error.
//!
//! Exit codes are a stable contract: 0 success, 2 missing or unreadable
//! input, 3 encoding error, 4 corpus parse error.

use std::fs;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use indexmap::IndexMap;
use serde::Serialize;

use flexner::eval::{
    self, load_corpus, AnnotatedDocument, CorpusError, LabelIndex, DEFAULT_TIMING_RUNS,
};
use flexner::lexicon::load_gazetteer;
use flexner::morphology::{load_lemma_table, DEFAULT_TAG_PREFIXES};
use flexner::recognizer::RecognizerConfig;
use flexner::textgen::generate_text;
use flexner::{Annotator, Gazetteer, HierarchicalRecognizer, PolicyConfig, StemFst};

/// Seed for generated benchmark corpora, fixed so runs are reproducible.
const BENCH_SEED: u64 = 42;

const EXIT_INPUT: u8 = 2;
const EXIT_ENCODING: u8 = 3;
const EXIT_CORPUS: u8 = 4;

#[derive(Parser)]
#[command(
    name = "flexner",
    version,
    about = "Inflection-tolerant multi-word term recognition for German text"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a recognizer and print index statistics as JSON.
    Build(BuildArgs),
    /// Annotate text from a file or standard input, one match per line.
    Annotate(AnnotateArgs),
    /// Score recognizers against an annotated corpus.
    Eval(EvalArgs),
    /// Measure annotation throughput over a corpus or generated text.
    Bench(BenchArgs),
}

/// Flags shared by every subcommand that builds a recognizer.
#[derive(Args)]
struct SourceArgs {
    /// Gazetteer TSV file: entity id, label, optional type per line.
    #[arg(long, value_name = "FILE")]
    gazetteer: Option<PathBuf>,
    /// Lemma table file: inflected form, lemma, tag per line.
    #[arg(long, value_name = "FILE")]
    lemmas: Option<PathBuf>,
    /// Policy file with `type = HIGH|LOW|ACRONYM` lines and a `default` row.
    #[arg(long, value_name = "FILE")]
    policies: Option<PathBuf>,
    /// Ceiling on simultaneously live scan processors (build time only).
    #[arg(long, value_name = "N")]
    rake_cap: Option<usize>,
    /// Comma-separated lemma-table tag prefixes to accept.
    #[arg(long, value_name = "PREFIXES")]
    tag_prefixes: Option<String>,
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Write the built index to this file.
    #[arg(long, value_name = "FILE")]
    index: Option<PathBuf>,
}

#[derive(Args)]
struct AnnotateArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Load a previously dumped index instead of building one.
    #[arg(long, value_name = "FILE")]
    index: Option<PathBuf>,
    /// Text file to annotate; standard input when absent.
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
    /// Output format for match lines.
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
    /// Which recognizers to run.
    #[arg(long, value_enum, default_value_t = RecognizerChoice::Mlfst)]
    recognizer: RecognizerChoice,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Load a previously dumped index instead of building one.
    #[arg(long, value_name = "FILE")]
    index: Option<PathBuf>,
    /// Annotated corpus: a file or a directory of files.
    #[arg(long, value_name = "PATH")]
    corpus: Option<PathBuf>,
    /// Which recognizers to score.
    #[arg(long, value_enum, default_value_t = RecognizerChoice::Both)]
    recognizer: RecognizerChoice,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Load a previously dumped index instead of building one.
    #[arg(long, value_name = "FILE")]
    index: Option<PathBuf>,
    /// Annotated corpus to time against.
    #[arg(long, value_name = "PATH")]
    corpus: Option<PathBuf>,
    /// Generate a corpus of this many characters instead of reading one.
    #[arg(long, value_name = "CHARS")]
    gen_size: Option<usize>,
    /// Which recognizers to time.
    #[arg(long, value_enum, default_value_t = RecognizerChoice::Both)]
    recognizer: RecognizerChoice,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Tsv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RecognizerChoice {
    Mlfst,
    Stemfst,
    Both,
}

impl RecognizerChoice {
    fn wants_mlfst(self) -> bool {
        matches!(self, Self::Mlfst | Self::Both)
    }

    fn wants_stemfst(self) -> bool {
        matches!(self, Self::Stemfst | Self::Both)
    }
}

/// A failure with its contractual exit code.
enum CliError {
    /// Missing or unreadable input, exit 2.
    Input(String),
    /// Invalid text encoding, exit 3.
    Encoding(String),
    /// Corpus parse failure, exit 4.
    Corpus(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            Self::Input(_) => EXIT_INPUT,
            Self::Encoding(_) => EXIT_ENCODING,
            Self::Corpus(_) => EXIT_CORPUS,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Input(m) | Self::Encoding(m) | Self::Corpus(m) => m,
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Build(args) => cmd_build(args),
        Command::Annotate(args) => cmd_annotate(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.code())
        }
    }
}

#[derive(Serialize)]
struct BuildStats {
    entries: usize,
    char_nodes: usize,
    word_nodes: usize,
    build_ms: f64,
}

fn cmd_build(args: BuildArgs) -> Result<(), CliError> {
    let gazetteer = load_gazetteer_file(
        required(&args.source.gazetteer, "--gazetteer")?,
        args.source.policies.as_deref(),
    )?;
    let table = load_table_file(
        required(&args.source.lemmas, "--lemmas")?,
        args.source.tag_prefixes.as_deref(),
    )?;
    let started = Instant::now();
    let recognizer =
        HierarchicalRecognizer::build(&gazetteer, table, recognizer_config(&args.source));
    let build_ms = started.elapsed().as_secs_f64() * 1000.0;
    if let Some(path) = &args.index {
        let file = fs::File::create(path)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
        recognizer
            .dump(BufWriter::new(file))
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
    }
    let stats = BuildStats {
        entries: gazetteer.entries.len(),
        char_nodes: recognizer.char_node_count(),
        word_nodes: recognizer.word_node_count(),
        build_ms,
    };
    println!("{}", to_json(&stats));
    Ok(())
}

fn cmd_annotate(args: AnnotateArgs) -> Result<(), CliError> {
    let annotators = build_annotators(
        args.recognizer,
        &args.source,
        args.index.as_deref(),
        load_optional_gazetteer(&args.source)?.as_ref(),
    )?;
    let text = match &args.input {
        Some(path) => read_text_file(path)?,
        None => read_stdin()?,
    };
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    for (_, annotator) in annotators.pairs() {
        for m in annotator.annotate(&text) {
            let line = match args.format {
                OutputFormat::Json => to_json(&m),
                OutputFormat::Tsv => format!(
                    "{}\t{}\t{}\t{}\t{}",
                    m.start,
                    m.end,
                    m.surface,
                    m.entity_ids.join(","),
                    m.recognizer
                ),
            };
            writeln!(out, "{line}").map_err(|e| CliError::Input(format!("cannot write: {e}")))?;
        }
    }
    out.flush()
        .map_err(|e| CliError::Input(format!("cannot write: {e}")))
}

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    let docs = load_corpus_file(required(&args.corpus, "--corpus")?)?;
    let gazetteer = load_optional_gazetteer(&args.source)?;
    let labels = LabelIndex::from_gazetteer(
        gazetteer
            .as_ref()
            .ok_or_else(|| missing("--gazetteer", "eval"))?,
    );
    let annotators = build_annotators(
        args.recognizer,
        &args.source,
        args.index.as_deref(),
        gazetteer.as_ref(),
    )?;
    let reports = eval::compare(&annotators.pairs(), &docs, &labels, DEFAULT_TIMING_RUNS);
    println!("{}", to_json_pretty(&reports));
    Ok(())
}

#[derive(Serialize)]
struct BenchReport {
    chars_per_ms: f64,
    wall_time_ms: f64,
    total_chars: u64,
    matches: u64,
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    let gazetteer = load_optional_gazetteer(&args.source)?;
    let annotators = build_annotators(
        args.recognizer,
        &args.source,
        args.index.as_deref(),
        gazetteer.as_ref(),
    )?;
    let docs = match (args.gen_size, &args.corpus) {
        (Some(size), _) => {
            let planted = match &gazetteer {
                Some(g) => unique_labels(g),
                None => Vec::new(),
            };
            vec![AnnotatedDocument {
                doc_id: "generated".to_string(),
                plain_text: generate_text(BENCH_SEED, size, &planted),
                annotations: Vec::new(),
            }]
        }
        (None, Some(path)) => load_corpus_file(path)?,
        (None, None) => {
            return Err(CliError::Input(
                "bench needs either --corpus or --gen-size".to_string(),
            ))
        }
    };
    let total_chars: u64 = docs.iter().map(|d| d.char_count() as u64).sum();
    let mut reports: IndexMap<&str, BenchReport> = IndexMap::new();
    for (name, annotator) in annotators.pairs() {
        let timing = eval::throughput(annotator, &docs, DEFAULT_TIMING_RUNS);
        reports.insert(
            name,
            BenchReport {
                chars_per_ms: timing.chars_per_ms,
                wall_time_ms: timing.wall_time_ms,
                total_chars,
                matches: timing.match_count,
            },
        );
    }
    println!("{}", to_json_pretty(&reports));
    Ok(())
}

/// The recognizers a run operates on, in a fixed report order.
struct Annotators {
    recognizer: Option<HierarchicalRecognizer>,
    stemfst: Option<StemFst>,
}

impl Annotators {
    fn pairs(&self) -> Vec<(&'static str, &dyn Annotator)> {
        let mut pairs: Vec<(&'static str, &dyn Annotator)> = Vec::new();
        if let Some(r) = &self.recognizer {
            pairs.push(("mlfst", r));
        }
        if let Some(s) = &self.stemfst {
            pairs.push(("stemfst", s));
        }
        pairs
    }
}

fn build_annotators(
    choice: RecognizerChoice,
    source: &SourceArgs,
    index: Option<&Path>,
    gazetteer: Option<&Gazetteer>,
) -> Result<Annotators, CliError> {
    let recognizer = if choice.wants_mlfst() {
        Some(match index {
            Some(path) => load_index_file(path)?,
            None => {
                let gazetteer = gazetteer.ok_or_else(|| missing("--gazetteer", "building"))?;
                let table = load_table_file(
                    required(&source.lemmas, "--lemmas")?,
                    source.tag_prefixes.as_deref(),
                )?;
                HierarchicalRecognizer::build(gazetteer, table, recognizer_config(source))
            }
        })
    } else {
        None
    };
    let stemfst = if choice.wants_stemfst() {
        let gazetteer =
            gazetteer.ok_or_else(|| missing("--gazetteer", "the stem-based recognizer"))?;
        Some(StemFst::build(gazetteer))
    } else {
        None
    };
    Ok(Annotators {
        recognizer,
        stemfst,
    })
}

fn recognizer_config(source: &SourceArgs) -> RecognizerConfig {
    let mut config = RecognizerConfig::default();
    if let Some(cap) = source.rake_cap {
        config.rake_cap = cap;
    }
    config
}

fn load_optional_gazetteer(source: &SourceArgs) -> Result<Option<Gazetteer>, CliError> {
    match &source.gazetteer {
        Some(path) => Ok(Some(load_gazetteer_file(
            path,
            source.policies.as_deref(),
        )?)),
        None => Ok(None),
    }
}

fn load_gazetteer_file(path: &Path, policies: Option<&Path>) -> Result<Gazetteer, CliError> {
    let policy_config = match policies {
        Some(p) => PolicyConfig::parse(&read_text_file(p)?)
            .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?,
        None => PolicyConfig::default(),
    };
    let src = read_text_file(path)?;
    let load = load_gazetteer(&src, &policy_config);
    for issue in &load.malformed {
        log::warn!("{}: line {}: {}", path.display(), issue.line, issue.reason);
    }
    if load.dropped > 0 {
        log::warn!(
            "{}: dropped {} rows with labels that normalize to nothing",
            path.display(),
            load.dropped
        );
    }
    Ok(load.gazetteer)
}

fn load_table_file(
    path: &Path,
    tag_prefixes: Option<&str>,
) -> Result<flexner::LemmaTable, CliError> {
    let src = read_text_file(path)?;
    let prefixes: Vec<&str> = match tag_prefixes {
        Some(list) => list.split(',').map(str::trim).collect(),
        None => DEFAULT_TAG_PREFIXES.to_vec(),
    };
    let load = load_lemma_table(&src, &prefixes);
    if load.malformed > 0 {
        log::warn!(
            "{}: skipped {} malformed lemma rows",
            path.display(),
            load.malformed
        );
    }
    Ok(load.table)
}

fn load_index_file(path: &Path) -> Result<HierarchicalRecognizer, CliError> {
    let file = fs::File::open(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    HierarchicalRecognizer::load(io::BufReader::new(file))
        .map_err(|e| CliError::Input(format!("cannot load index {}: {e}", path.display())))
}

fn load_corpus_file(path: &Path) -> Result<Vec<AnnotatedDocument>, CliError> {
    load_corpus(path).map_err(|e| match e {
        CorpusError::Io(io) => CliError::Input(format!("cannot read {}: {io}", path.display())),
        parse => CliError::Corpus(parse.to_string()),
    })
}

fn read_text_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    String::from_utf8(bytes)
        .map_err(|_| CliError::Encoding(format!("{}: input is not valid UTF-8", path.display())))
}

fn read_stdin() -> Result<String, CliError> {
    let mut bytes = Vec::new();
    io::stdin()
        .read_to_end(&mut bytes)
        .map_err(|e| CliError::Input(format!("cannot read standard input: {e}")))?;
    String::from_utf8(bytes)
        .map_err(|_| CliError::Encoding("standard input is not valid UTF-8".to_string()))
}

fn required<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
    path.as_deref()
        .ok_or_else(|| CliError::Input(format!("{flag} is required for this subcommand")))
}

fn missing(flag: &str, needed_for: &str) -> CliError {
    CliError::Input(format!("{flag} is required for {needed_for}"))
}

fn unique_labels(gazetteer: &Gazetteer) -> Vec<&str> {
    let mut seen = std::collections::HashSet::new();
    gazetteer
        .entries
        .iter()
        .map(|e| e.label.as_str())
        .filter(|label| seen.insert(*label))
        .collect()
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("report types serialize without error")
}

fn to_json_pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report types serialize without error")
}
