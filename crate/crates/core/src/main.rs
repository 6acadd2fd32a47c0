//! `summine` command-line interface.
//!
//! Exit codes: 0 success, 1 internal error, 2 bad input or config.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use summine::config::{PipelineConfig, ABSTRACTOR_IDENTITY, GENERATOR_BUILTIN};
use summine::corpus::{ingest_jsonl, Document, StatsAccumulator};
use summine::embed::{load_word_vectors, WordVectorTable};
use summine::extract::{
    estimate_k, lead, lexrank_auto, oracle_extract, ExtractMethod, ExtractRecord, ExtractedSummary,
};
use summine::generator::{
    Generator, GeneratorRequest, IdentityGenerator, NoisingGenerator, SubprocessGenerator,
};
use summine::metrics::evaluate;
use summine::mine::{mine, read_pairs_tsv, write_pairs_tsv, MinedDataset};
use summine::synth::{expand_with_backtranslation, merge_datasets};
use summine::{Error, Result};

#[derive(Parser)]
#[command(name = "summine", version, about = "Unsupervised extract-then-abstract summarization toolkit")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON pipeline config; flags override file values
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// worker thread count
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// seed for the built-in noising generator
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// output file (default: standard output)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and normalize a corpus JSONL file
    Ingest {
        /// corpus JSONL
        input: PathBuf,
    },
    /// Print corpus statistics as JSON
    Stats {
        /// corpus JSONL
        input: PathBuf,
        /// also report the average sentence count, rounded, as estimated k
        #[arg(long)]
        estimate_k: bool,
    },
    /// Mine pseudo-parallel sentence pairs from summaries and articles
    Mine {
        /// summary corpus JSONL
        summaries: PathBuf,
        /// article corpus JSONL
        articles: PathBuf,
    },
    /// Expand mined pairs with backtranslated sentences and merge
    Synth {
        /// mined pair TSV
        pairs: PathBuf,
        /// summary corpus JSONL
        summaries: PathBuf,
    },
    /// Run the extractor and write extract records as JSONL
    Extract {
        /// article corpus JSONL
        input: PathBuf,
    },
    /// Extract and abstract: full summarization pass
    Summarize {
        /// article corpus JSONL
        input: PathBuf,
    },
    /// Best-possible extractive summaries given references
    Oracle {
        /// article corpus JSONL
        articles: PathBuf,
        /// reference corpus JSONL
        references: PathBuf,
    },
    /// Score system output against references
    Eval {
        /// system output JSONL ({"id", "text"})
        system: PathBuf,
        /// reference JSONL
        references: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("summine: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 for bad inputs or configuration, 1 for everything else.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Record { .. }
        | Error::DuplicateId(_)
        | Error::Format { .. }
        | Error::EmptyInput(_)
        | Error::Input(_)
        | Error::DegenerateSentence(_)
        | Error::Io(_)
        | Error::Json(_) => 2,
        Error::Protocol(_) | Error::DimensionMismatch(..) | Error::LengthMismatch(..) => 1,
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.common.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(workers) = cli.common.workers {
        config.workers = workers;
    }
    if let Some(seed) = cli.common.seed {
        config.seed = seed;
    }
    config.validate()?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build_global()
        .expect("global thread pool built once");

    match &cli.command {
        Command::Ingest { input } => cmd_ingest(input, cli.common.out.as_deref()),
        Command::Stats { input, estimate_k } => {
            cmd_stats(input, *estimate_k, cli.common.out.as_deref())
        }
        Command::Mine {
            summaries,
            articles,
        } => cmd_mine(summaries, articles, &config, cli.common.out.as_deref()),
        Command::Synth { pairs, summaries } => {
            cmd_synth(pairs, summaries, &config, cli.common.out.as_deref())
        }
        Command::Extract { input } => cmd_extract(input, &config, cli.common.out.as_deref()),
        Command::Summarize { input } => cmd_summarize(input, &config, cli.common.out.as_deref()),
        Command::Oracle {
            articles,
            references,
        } => cmd_oracle(articles, references, &config, cli.common.out.as_deref()),
        Command::Eval { system, references } => cmd_eval(system, references),
    }
}

/// An output sink: `--out` file or standard output.
fn open_out(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(std::io::BufWriter::new(std::fs::File::create(path)?)),
        None => Box::new(std::io::BufWriter::new(std::io::stdout().lock())),
    })
}

/// Read a whole corpus, skipping malformed records with a warning.
/// Duplicate ids and I/O failures remain fatal.
fn read_corpus(path: &Path) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    for item in ingest_jsonl(path)? {
        match item {
            Ok(doc) => docs.push(doc),
            Err(e @ Error::Record { .. }) => {
                eprintln!("warning: {}: {e}; record skipped", path.display());
            }
            Err(e) => return Err(e),
        }
    }
    Ok(docs)
}

fn load_vectors(config: &PipelineConfig) -> Result<WordVectorTable> {
    let path = config
        .word_vectors_path
        .as_ref()
        .ok_or(Error::EmptyInput("word_vectors_path is not configured"))?;
    load_word_vectors(path)
}

#[derive(Serialize)]
struct NormalizedRecord<'a> {
    id: &'a str,
    sentences: Vec<&'a str>,
    #[serde(skip_serializing_if = "str::is_empty")]
    source: &'a str,
}

fn cmd_ingest(input: &Path, out: Option<&Path>) -> Result<()> {
    let docs = read_corpus(input)?;
    let mut sink = open_out(out)?;
    for doc in &docs {
        let record = NormalizedRecord {
            id: &doc.id,
            sentences: doc.sentences.iter().map(|s| s.raw.as_str()).collect(),
            source: &doc.source,
        };
        serde_json::to_writer(&mut sink, &record)?;
        writeln!(sink)?;
    }
    sink.flush()?;
    eprintln!("ingested {} documents", docs.len());
    Ok(())
}

fn cmd_stats(input: &Path, with_estimate_k: bool, out: Option<&Path>) -> Result<()> {
    let mut acc = StatsAccumulator::new();
    let mut docs = Vec::new();
    for item in ingest_jsonl(input)? {
        match item {
            Ok(doc) => {
                acc.push(&doc);
                if with_estimate_k {
                    docs.push(doc);
                }
            }
            Err(e @ Error::Record { .. }) => {
                eprintln!("warning: {}: {e}; record skipped", input.display());
            }
            Err(e) => return Err(e),
        }
    }
    let stats = acc.finish();
    let mut sink = open_out(out)?;
    let mut value = serde_json::to_value(&stats)?;
    if with_estimate_k {
        let k = estimate_k(docs.iter())?;
        value["estimated_k"] = serde_json::json!(k);
    }
    serde_json::to_writer(&mut sink, &value)?;
    writeln!(sink)?;
    sink.flush()?;
    Ok(())
}

fn cmd_mine(
    summaries_path: &Path,
    articles_path: &Path,
    config: &PipelineConfig,
    out: Option<&Path>,
) -> Result<()> {
    let table = load_vectors(config)?;
    let summaries = read_corpus(summaries_path)?;
    let articles = read_corpus(articles_path)?;
    let dataset = mine(&summaries, &articles, &table, &config.align);
    let mut sink = open_out(out)?;
    write_pairs_tsv(&dataset.pairs, &mut sink)?;
    sink.flush()?;
    println!("{}", serde_json::to_string(&dataset.stats)?);
    Ok(())
}

fn cmd_synth(
    pairs_path: &Path,
    summaries_path: &Path,
    config: &PipelineConfig,
    out: Option<&Path>,
) -> Result<()> {
    let pp = MinedDataset::from_pairs(read_pairs_tsv(pairs_path)?);
    let summaries = read_corpus(summaries_path)?;
    let sentences: Vec<_> = summaries
        .iter()
        .flat_map(|d| d.sentences.iter().cloned())
        .collect();
    let mut generator: Box<dyn Generator> = if config.generator_command == GENERATOR_BUILTIN {
        Box::new(NoisingGenerator { seed: config.seed })
    } else {
        Box::new(SubprocessGenerator::spawn(&config.generator_command)?)
    };
    let bt = expand_with_backtranslation(&sentences, generator.as_mut(), config.j_hypotheses)?;
    let merged = merge_datasets(&pp, &bt);
    let mut sink = open_out(out)?;
    write_pairs_tsv(&merged.pairs, &mut sink)?;
    sink.flush()?;
    println!("{}", serde_json::to_string(&merged.stats)?);
    Ok(())
}

fn extract_one(doc: &Document, config: &PipelineConfig) -> ExtractedSummary {
    match config.extract.method {
        ExtractMethod::Lead => lead(doc, config.extract.k),
        ExtractMethod::LexRank => lexrank_auto(doc, &config.extract),
    }
}

fn cmd_extract(input: &Path, config: &PipelineConfig, out: Option<&Path>) -> Result<()> {
    use rayon::prelude::*;
    let docs = read_corpus(input)?;
    let extracts: Vec<ExtractedSummary> =
        docs.par_iter().map(|d| extract_one(d, config)).collect();
    let mut sink = open_out(out)?;
    for extract in &extracts {
        serde_json::to_writer(&mut sink, &ExtractRecord::from(extract))?;
        writeln!(sink)?;
    }
    sink.flush()?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct SummaryRecord {
    id: String,
    /// abstracted sentences joined with single spaces
    text: String,
    indices: Vec<usize>,
    /// the extracted sentences before abstraction; named so corpus
    /// readers (which prefer a "sentences" field) evaluate "text"
    extracted: Vec<String>,
}

fn cmd_summarize(input: &Path, config: &PipelineConfig, out: Option<&Path>) -> Result<()> {
    use rayon::prelude::*;
    let docs = read_corpus(input)?;
    let extracts: Vec<ExtractedSummary> =
        docs.par_iter().map(|d| extract_one(d, config)).collect();

    // one abstractor request per extracted sentence, j=1, ids by position
    let mut requests = Vec::new();
    for (doc_idx, extract) in extracts.iter().enumerate() {
        for (pick_idx, (_, sentence)) in extract.picks.iter().enumerate() {
            requests.push(GeneratorRequest {
                id: format!("{doc_idx}.{pick_idx}"),
                text: sentence.raw.clone(),
                j: 1,
            });
        }
    }
    let responses = if config.abstractor_command == ABSTRACTOR_IDENTITY {
        IdentityGenerator.generate(&requests)?
    } else {
        SubprocessGenerator::spawn(&config.abstractor_command)?.generate(&requests)?
    };
    let mut top_by_id: HashMap<&str, &str> = HashMap::with_capacity(responses.len());
    for response in &responses {
        let top = response
            .hypotheses
            .first()
            .ok_or_else(|| Error::Protocol(format!("no hypothesis for request {}", response.id)))?;
        top_by_id.insert(&response.id, top);
    }

    let mut sink = open_out(out)?;
    for (doc_idx, extract) in extracts.iter().enumerate() {
        let abstracted: Vec<&str> = (0..extract.picks.len())
            .map(|pick_idx| {
                let id = format!("{doc_idx}.{pick_idx}");
                top_by_id
                    .get(id.as_str())
                    .copied()
                    .ok_or_else(|| Error::Protocol(format!("missing response for request {id}")))
            })
            .collect::<Result<_>>()?;
        let record = SummaryRecord {
            id: extract.doc_id.clone(),
            text: abstracted.join(" "),
            indices: extract.indices(),
            extracted: extract.raw_sentences(),
        };
        serde_json::to_writer(&mut sink, &record)?;
        writeln!(sink)?;
    }
    sink.flush()?;
    Ok(())
}

/// Pair system/article documents with references by id; the first id
/// missing on either side is fatal.
fn pair_by_id(left: Vec<Document>, right: Vec<Document>) -> Result<Vec<(Document, Document)>> {
    let mut right_by_id: HashMap<String, Document> =
        right.into_iter().map(|d| (d.id.clone(), d)).collect();
    let mut pairs = Vec::with_capacity(left.len());
    for doc in left {
        let Some(matched) = right_by_id.remove(&doc.id) else {
            return Err(Error::Input(format!(
                "id {:?} has no counterpart in the reference file",
                doc.id
            )));
        };
        pairs.push((doc, matched));
    }
    let mut leftover: Vec<String> = right_by_id.into_keys().collect();
    leftover.sort();
    if let Some(id) = leftover.first() {
        return Err(Error::Input(format!(
            "reference id {id:?} has no counterpart in the system file"
        )));
    }
    Ok(pairs)
}

fn doc_tokens(doc: &Document) -> Vec<String> {
    doc.sentences
        .iter()
        .flat_map(|s| s.tokens.iter().cloned())
        .collect()
}

fn cmd_oracle(
    articles_path: &Path,
    references_path: &Path,
    config: &PipelineConfig,
    out: Option<&Path>,
) -> Result<()> {
    use rayon::prelude::*;
    let _ = config;
    let pairs = pair_by_id(read_corpus(articles_path)?, read_corpus(references_path)?)?;
    let extracts: Vec<ExtractedSummary> = pairs
        .par_iter()
        .map(|(article, reference)| oracle_extract(article, reference))
        .collect();
    let mut sink = open_out(out)?;
    for extract in &extracts {
        serde_json::to_writer(&mut sink, &ExtractRecord::from(extract))?;
        writeln!(sink)?;
    }
    sink.flush()?;
    let system: Vec<Vec<String>> = extracts.iter().map(|e| e.tokens()).collect();
    let references: Vec<Vec<String>> = pairs.iter().map(|(_, r)| doc_tokens(r)).collect();
    let report = evaluate(&system, &references)?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}

fn cmd_eval(system_path: &Path, references_path: &Path) -> Result<()> {
    let pairs = pair_by_id(read_corpus(system_path)?, read_corpus(references_path)?)?;
    let system: Vec<Vec<String>> = pairs.iter().map(|(s, _)| doc_tokens(s)).collect();
    let references: Vec<Vec<String>> = pairs.iter().map(|(_, r)| doc_tokens(r)).collect();
    let report = evaluate(&system, &references)?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}
