//! Command-line pipeline: `convert`, `stats`, `decode`, and `eval`
//! subcommands, each writing its resolved configuration and the toolkit
//! version alongside its outputs so runs are reproducible.
//!
//! Exit codes: 0 on success, 1 on fatal input errors, 2 on configuration
//! errors (including flag parsing). `LSOIE_INPUT_ROOT` and
//! `LSOIE_OUTPUT_ROOT` prepend to relative input/output paths when set.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::bio::{
    self, encode_bio, read_emission_file, tags_to_extraction, write_tag_file, BioError,
    TagSequence, TransitionConstraints,
};
use crate::convert::{
    collect_position_stats, collect_position_stats_par, convert_corpus, convert_corpus_par,
    ConversionReport, Extraction, PositionStats, DEFAULT_PRODUCT_CAP,
};
use crate::eval::{evaluate, write_pr_csv, DependencyHeads, MatchingMode};
use crate::files::{
    read_extractions_auto, write_extractions_jsonl, write_extractions_tsv, ExtractionRow,
};
use crate::qasrl::{parse_corpus, Domain, FilterOutcome, Partition, SentenceRecord};
use crate::stats::compute_metrics;

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(name = "lsoie", version, about = "QA-SRL to open information extraction pipeline")]
pub struct Cli {
    /// Worker-pool size for parallel stages; 1 runs single-threaded.
    /// Outputs are identical for any value.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,

    /// Seed recorded for provenance; reserved for randomized utilities.
    /// The pipeline itself is deterministic.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Convert QA-SRL 2.0 files into extraction, tag, and report files.
    Convert(ConvertArgs),
    /// Compute corpus metrics over converted extractions.
    Stats(StatsArgs),
    /// Viterbi-decode emission files into tags, extractions, confidences.
    Decode(DecodeArgs),
    /// Score a prediction file against gold extractions.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DomainFilter {
    Wiki,
    Sci,
    All,
}

impl DomainFilter {
    fn admits(self, domain: Domain) -> bool {
        match self {
            DomainFilter::Wiki => domain == Domain::Wiki,
            DomainFilter::Sci => domain == Domain::Sci,
            DomainFilter::All => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StatsMode {
    /// Position statistics per partition (default; avoids test-set leakage).
    PerPartition,
    /// One position table over all input partitions.
    Global,
}

#[derive(clap::Args, Debug)]
pub struct ConvertArgs {
    /// QA-SRL 2.0 JSON-lines input files (.jsonl or .jsonl.gz).
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,

    /// Partition for all inputs; default infers train/dev/test from each
    /// file name.
    #[arg(long, value_enum)]
    pub partition: Option<Partition>,

    /// Keep only sentences of this domain in the output.
    #[arg(long, value_enum, default_value = "all")]
    pub domain: DomainFilter,

    #[arg(long, value_enum, default_value = "per-partition")]
    pub stats_mode: StatsMode,

    /// Per-predicate cap on the answer-set Cartesian product.
    #[arg(long, default_value_t = DEFAULT_PRODUCT_CAP)]
    pub product_cap: usize,

    /// Keep model-generated questions instead of crowd-written only.
    #[arg(long)]
    pub no_crowd_filter: bool,

    /// Source-id prefix marking crowd-written questions.
    #[arg(long, default_value = "turk-")]
    pub crowd_prefix: String,

    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(clap::Args, Debug)]
pub struct StatsArgs {
    /// QA-SRL 2.0 corpus files the extractions were produced from.
    #[arg(long, required = true, num_args = 1..)]
    pub corpus: Vec<PathBuf>,

    /// Extraction files (TSV or JSONL).
    #[arg(long, required = true, num_args = 1..)]
    pub extractions: Vec<PathBuf>,

    /// Also emit the tag-distribution CSV for plotting.
    #[arg(long)]
    pub figure3: bool,

    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConfidenceVariant {
    /// Mean emission log-probability over tagged (non-O) positions.
    Mean,
    /// Mean emission log-probability over all positions.
    MeanAll,
    /// Viterbi path log-probability of the whole sequence.
    Sequence,
}

#[derive(clap::Args, Debug)]
pub struct DecodeArgs {
    /// Emission files (JSON lines; see FORMATS.md).
    #[arg(long, required = true, num_args = 1..)]
    pub emissions: Vec<PathBuf>,

    /// Optional QA-SRL corpus supplying sentence tokens by sentence id.
    #[arg(long)]
    pub corpus: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "mean")]
    pub confidence: ConfidenceVariant,

    #[arg(long)]
    pub out: PathBuf,
}

#[derive(clap::Args, Debug)]
pub struct EvalArgs {
    /// Gold extraction file.
    #[arg(long)]
    pub gold: PathBuf,

    /// Prediction file (extraction format with a confidence column).
    #[arg(long)]
    pub pred: PathBuf,

    /// CoNLL-U dependency parses keyed by sent_id; without them the head
    /// fallback heuristic is used and counted.
    #[arg(long)]
    pub heads: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "positional")]
    pub matching: MatchingMode,

    #[arg(long)]
    pub out: PathBuf,
}

/// Errors mapped to process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Exit 1: unreadable or malformed input, empty required data.
    Input(String),
    /// Exit 2: inconsistent flags or unresolvable configuration.
    Config(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Config(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Config(m) => m,
        }
    }
}

fn input_err(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

/// Parse arguments, run, and return the process exit code.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    if cli.jobs == 0 {
        return Err(CliError::Config("--jobs must be at least 1".into()));
    }
    match &cli.command {
        Command::Convert(args) => cmd_convert(&cli, args),
        Command::Stats(args) => cmd_stats(&cli, args),
        Command::Decode(args) => cmd_decode(&cli, args),
        Command::Eval(args) => cmd_eval(&cli, args),
    }
}

// ---------------------------------------------------------------------------
// Path resolution and config echo
// ---------------------------------------------------------------------------

fn resolve_input(path: &Path) -> PathBuf {
    match std::env::var_os("LSOIE_INPUT_ROOT") {
        Some(root) if path.is_relative() => Path::new(&root).join(path),
        _ => path.to_path_buf(),
    }
}

fn resolve_out(path: &Path) -> PathBuf {
    match std::env::var_os("LSOIE_OUTPUT_ROOT") {
        Some(root) if path.is_relative() => Path::new(&root).join(path),
        _ => path.to_path_buf(),
    }
}

fn prepare_out_dir(out: &Path) -> Result<PathBuf, CliError> {
    let out = resolve_out(out);
    fs::create_dir_all(&out)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", out.display())))?;
    Ok(out)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("report serialization cannot fail");
    fs::write(path, text + "\n")
        .map_err(|e| input_err(format!("writing {}: {e}", path.display())))
}

/// Every run records its resolved configuration and the toolkit version.
fn write_run_config(
    out: &Path,
    command: &str,
    cli: &Cli,
    args: serde_json::Value,
) -> Result<(), CliError> {
    let config = json!({
        "toolkit_version": TOOLKIT_VERSION,
        "command": command,
        "jobs": cli.jobs,
        "seed": cli.seed,
        "input_root": std::env::var("LSOIE_INPUT_ROOT").ok(),
        "output_root": std::env::var("LSOIE_OUTPUT_ROOT").ok(),
        "args": args,
    });
    write_json(&out.join("run_config.json"), &config)
}

fn create_writer(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| input_err(format!("creating {}: {e}", path.display())))
}

fn build_pool(jobs: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))
}

// ---------------------------------------------------------------------------
// convert
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ConvertFileEntry {
    path: String,
    partition: String,
    records: usize,
}

#[derive(Serialize)]
struct ConvertOutputEntry {
    domain: String,
    partition: String,
    sentences: usize,
    extractions: usize,
}

#[derive(Serialize)]
struct ConvertReportFile {
    files: Vec<ConvertFileEntry>,
    provenance_defaulted_crowd: usize,
    questions_dropped_not_crowd: usize,
    records_dropped_no_crowd_questions: usize,
    conversion: ConversionReport,
    tag_encode_skipped: usize,
    outputs: Vec<ConvertOutputEntry>,
}

fn cmd_convert(cli: &Cli, args: &ConvertArgs) -> Result<(), CliError> {
    let out = prepare_out_dir(&args.out)?;
    write_run_config(
        &out,
        "convert",
        cli,
        json!({
            "input": args.input.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "partition": args.partition.map(|p| p.as_str()),
            "domain": format!("{:?}", args.domain).to_lowercase(),
            "stats_mode": format!("{:?}", args.stats_mode),
            "product_cap": args.product_cap,
            "no_crowd_filter": args.no_crowd_filter,
            "crowd_prefix": args.crowd_prefix,
            "out": out.display().to_string(),
        }),
    )?;

    // Load every input, tagging records with their partition.
    let mut files = Vec::new();
    let mut partitions: BTreeMap<&'static str, Vec<SentenceRecord>> = BTreeMap::new();
    let mut filter_totals = FilterOutcome::default();
    for input in &args.input {
        let path = resolve_input(input);
        let partition = match args.partition {
            Some(p) => p,
            None => Partition::from_file_name(
                path.file_name().and_then(|n| n.to_str()).unwrap_or(""),
            )
            .ok_or_else(|| {
                CliError::Config(format!(
                    "cannot infer partition from {}; pass --partition",
                    path.display()
                ))
            })?,
        };
        let corpus = parse_corpus(&path, partition).map_err(input_err)?;
        let records = if args.no_crowd_filter {
            corpus.records
        } else {
            let outcome = crate::qasrl::filter_crowdsourced(corpus.records, &args.crowd_prefix);
            filter_totals.defaulted_crowd += outcome.defaulted_crowd;
            filter_totals.questions_dropped += outcome.questions_dropped;
            filter_totals.records_dropped += outcome.records_dropped;
            outcome.records
        };
        files.push(ConvertFileEntry {
            path: path.display().to_string(),
            partition: partition.as_str().to_string(),
            records: records.len(),
        });
        partitions
            .entry(partition.as_str())
            .or_default()
            .extend(records);
    }

    let pool = build_pool(cli.jobs)?;
    let parallel = cli.jobs > 1;

    // Pass 1: position statistics. Computed over all loaded records (both
    // domains) so the table reflects the full corpus; per-partition mode
    // keeps train/dev/test tables separate.
    let global_stats = match args.stats_mode {
        StatsMode::Global => {
            let all: Vec<&[SentenceRecord]> = partitions.values().map(|v| v.as_slice()).collect();
            let merged: Vec<SentenceRecord> =
                all.iter().flat_map(|r| r.iter().cloned()).collect();
            Some(stats_for(&merged, parallel, &pool))
        }
        StatsMode::PerPartition => None,
    };

    // Pass 2: conversion per partition.
    let mut report = ConversionReport::default();
    let mut tag_encode_skipped = 0usize;
    let mut outputs = Vec::new();
    let mut stats_export: BTreeMap<String, BTreeMap<String, Vec<f64>>> = BTreeMap::new();
    for (partition_name, records) in &partitions {
        let stats = match &global_stats {
            Some(s) => s.clone(),
            None => stats_for(records, parallel, &pool),
        };
        stats_export.insert(partition_name.to_string(), stats.to_normalized());

        let kept: Vec<SentenceRecord> = records
            .iter()
            .filter(|r| args.domain.admits(r.domain()))
            .cloned()
            .collect();
        let (extractions, part_report) = if parallel {
            pool.install(|| convert_corpus_par(&kept, &stats, args.product_cap))
        } else {
            convert_corpus(&kept, &stats, args.product_cap)
        };
        report.merge(&part_report);

        // Group extractions by domain for the output files.
        let by_id: BTreeMap<&str, &SentenceRecord> = kept
            .iter()
            .map(|r| (r.sentence_id.as_str(), r))
            .collect();
        let mut by_domain: BTreeMap<Domain, Vec<&Extraction>> = BTreeMap::new();
        for extraction in &extractions {
            let domain = Domain::of_sentence_id(&extraction.sentence_id);
            by_domain.entry(domain).or_default().push(extraction);
        }
        for (domain, group) in by_domain {
            let base = format!("{}.{}", domain.as_str(), partition_name);
            let rows: Vec<ExtractionRow> = group
                .iter()
                .map(|ex| ExtractionRow {
                    tokens: by_id[ex.sentence_id.as_str()].tokens.clone(),
                    extraction: (*ex).clone(),
                })
                .collect();

            let mut tsv = create_writer(&out.join(format!("{base}.extractions.tsv")))?;
            write_extractions_tsv(&mut tsv, &rows).map_err(input_err)?;
            let mut jsonl = create_writer(&out.join(format!("{base}.extractions.jsonl")))?;
            write_extractions_jsonl(&mut jsonl, &rows).map_err(input_err)?;

            let mut encoded: Vec<(TagSequence, &[String])> = Vec::new();
            for ex in &group {
                let record = by_id[ex.sentence_id.as_str()];
                match encode_bio(record, ex) {
                    Ok(tags) => encoded.push((tags, record.tokens.as_slice())),
                    Err(BioError::TooManyArguments) => tag_encode_skipped += 1,
                    Err(e) => return Err(input_err(e)),
                }
            }
            let mut tag_out = create_writer(&out.join(format!("{base}.tags.conll")))?;
            write_tag_file(&mut tag_out, encoded.iter().map(|(t, toks)| (t, *toks)))
                .map_err(input_err)?;

            let sentences = group
                .iter()
                .map(|ex| ex.sentence_id.as_str())
                .collect::<std::collections::HashSet<_>>()
                .len();
            outputs.push(ConvertOutputEntry {
                domain: domain.as_str().to_string(),
                partition: partition_name.to_string(),
                sentences,
                extractions: group.len(),
            });
        }
    }

    write_json(&out.join("position_stats.json"), &stats_export)?;
    let report_file = ConvertReportFile {
        files,
        provenance_defaulted_crowd: filter_totals.defaulted_crowd,
        questions_dropped_not_crowd: filter_totals.questions_dropped,
        records_dropped_no_crowd_questions: filter_totals.records_dropped,
        conversion: report,
        tag_encode_skipped,
        outputs,
    };
    write_json(&out.join("conversion_report.json"), &report_file)?;

    println!(
        "convert: {} extractions from {} input file(s) -> {}",
        report_file.conversion.extractions_out,
        report_file.files.len(),
        out.display()
    );
    Ok(())
}

fn stats_for(
    records: &[SentenceRecord],
    parallel: bool,
    pool: &rayon::ThreadPool,
) -> PositionStats {
    if parallel {
        pool.install(|| collect_position_stats_par(records))
    } else {
        collect_position_stats(records)
    }
}

// ---------------------------------------------------------------------------
// stats
// ---------------------------------------------------------------------------

fn cmd_stats(cli: &Cli, args: &StatsArgs) -> Result<(), CliError> {
    let out = prepare_out_dir(&args.out)?;
    write_run_config(
        &out,
        "stats",
        cli,
        json!({
            "corpus": args.corpus.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "extractions": args.extractions.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "figure3": args.figure3,
            "out": out.display().to_string(),
        }),
    )?;

    let mut records = Vec::new();
    for path in &args.corpus {
        let path = resolve_input(path);
        let reader = crate::files::open_text(&path)
            .map_err(|e| input_err(format!("reading {}: {e}", path.display())))?;
        records.extend(crate::qasrl::parse_lines(reader).map_err(input_err)?);
    }
    let mut extractions = Vec::new();
    for path in &args.extractions {
        let path = resolve_input(path);
        for row in read_extractions_auto(&path).map_err(input_err)? {
            extractions.push(row.extraction);
        }
    }

    let metrics = compute_metrics(&records, &extractions).map_err(input_err)?;
    write_json(&out.join("metrics.json"), &metrics)?;
    fs::write(out.join("metrics.txt"), metrics.render_table())
        .map_err(|e| input_err(format!("writing metrics.txt: {e}")))?;
    if args.figure3 {
        let mut csv = create_writer(&out.join("tag_distribution.csv"))?;
        metrics
            .write_tag_distribution_csv(&mut csv)
            .map_err(input_err)?;
    }
    print!("{}", metrics.render_table());
    Ok(())
}

// ---------------------------------------------------------------------------
// decode
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct DecodeReportFile {
    records_in: usize,
    decoded: usize,
    skipped_no_predicate: usize,
    skipped_no_arguments: usize,
    confidence_variant: String,
}

fn cmd_decode(cli: &Cli, args: &DecodeArgs) -> Result<(), CliError> {
    let out = prepare_out_dir(&args.out)?;
    write_run_config(
        &out,
        "decode",
        cli,
        json!({
            "emissions": args.emissions.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "corpus": args.corpus.as_ref().map(|p| p.display().to_string()),
            "confidence": format!("{:?}", args.confidence).to_lowercase(),
            "out": out.display().to_string(),
        }),
    )?;

    let corpus_tokens: BTreeMap<String, Vec<String>> = match &args.corpus {
        Some(path) => {
            let path = resolve_input(path);
            let reader = crate::files::open_text(&path)
                .map_err(|e| input_err(format!("reading {}: {e}", path.display())))?;
            crate::qasrl::parse_lines(reader)
                .map_err(input_err)?
                .into_iter()
                .map(|r| (r.sentence_id, r.tokens))
                .collect()
        }
        None => BTreeMap::new(),
    };

    let constraints = TransitionConstraints::bio();
    let mut report = DecodeReportFile {
        records_in: 0,
        decoded: 0,
        skipped_no_predicate: 0,
        skipped_no_arguments: 0,
        confidence_variant: format!("{:?}", args.confidence).to_lowercase(),
    };
    let mut rows: Vec<ExtractionRow> = Vec::new();
    let mut tag_blocks: Vec<(TagSequence, Vec<String>)> = Vec::new();
    // Both confidence variants per decoded extraction, for comparison.
    let mut confidences: Vec<(String, usize, f64, f64, f64)> = Vec::new();

    for path in &args.emissions {
        let path = resolve_input(path);
        let emission_records = read_emission_file(&path).map_err(input_err)?;
        for record in emission_records {
            report.records_in += 1;
            let (tags, path_logprob) =
                bio::decode_viterbi(&record.emissions, &constraints).map_err(input_err)?;
            let tokens: Vec<String> = corpus_tokens
                .get(&record.sentence_id)
                .cloned()
                .or_else(|| record.tokens.clone())
                .unwrap_or_else(|| (0..tags.len()).map(|i| i.to_string()).collect());
            if tokens.len() != tags.len() {
                return Err(input_err(format!(
                    "{}: {} tokens for {} emission rows",
                    record.sentence_id,
                    tokens.len(),
                    tags.len()
                )));
            }
            let sequence = TagSequence {
                sentence_id: record.sentence_id.clone(),
                predicate_index: record.predicate_index,
                tags,
            };

            let mut extraction = match tags_to_extraction(&sequence, &tokens) {
                Ok(ex) => ex,
                Err(BioError::MissingPredicate) => {
                    report.skipped_no_predicate += 1;
                    tag_blocks.push((sequence, tokens));
                    continue;
                }
                Err(e) => return Err(input_err(e)),
            };
            if extraction.arguments.is_empty() {
                report.skipped_no_arguments += 1;
                tag_blocks.push((sequence, tokens));
                continue;
            }

            // A decoded extraction has a predicate tag, so the tagged-token
            // mean is always defined here.
            let mean = bio::confidence_mean_logprob(&sequence, &record.emissions)
                .map_err(input_err)?;
            let mean_all =
                bio::confidence_mean_logprob_all_positions(&sequence, &record.emissions)
                    .map_err(input_err)?;
            let sequence_logprob = bio::confidence_sequence_logprob(path_logprob);
            confidences.push((
                record.sentence_id.clone(),
                record.predicate_index,
                mean,
                mean_all,
                sequence_logprob,
            ));
            extraction.confidence = Some(match args.confidence {
                ConfidenceVariant::Mean => mean,
                ConfidenceVariant::MeanAll => mean_all,
                ConfidenceVariant::Sequence => sequence_logprob,
            });
            report.decoded += 1;
            tag_blocks.push((sequence, tokens.clone()));
            rows.push(ExtractionRow { tokens, extraction });
        }
    }

    let mut tag_out = create_writer(&out.join("decoded.tags.conll"))?;
    write_tag_file(&mut tag_out, tag_blocks.iter().map(|(t, toks)| (t, toks.as_slice())))
        .map_err(input_err)?;
    let mut tsv = create_writer(&out.join("decoded.extractions.tsv"))?;
    write_extractions_tsv(&mut tsv, &rows).map_err(input_err)?;
    let mut jsonl = create_writer(&out.join("decoded.extractions.jsonl"))?;
    crate::files::write_extractions_jsonl(&mut jsonl, &rows).map_err(input_err)?;
    let mut conf_csv = create_writer(&out.join("decoded.confidences.csv"))?;
    {
        use std::io::Write;
        writeln!(
            conf_csv,
            "sentence_id,predicate_index,mean_logprob,mean_logprob_all,sequence_logprob"
        )
        .map_err(input_err)?;
        for (sid, pidx, mean, mean_all, seq) in &confidences {
            writeln!(conf_csv, "{sid},{pidx},{mean},{mean_all},{seq}").map_err(input_err)?;
        }
    }
    write_json(&out.join("decode_report.json"), &report)?;

    println!(
        "decode: {} of {} records decoded -> {}",
        report.decoded,
        report.records_in,
        out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

fn cmd_eval(cli: &Cli, args: &EvalArgs) -> Result<(), CliError> {
    let out = prepare_out_dir(&args.out)?;
    write_run_config(
        &out,
        "eval",
        cli,
        json!({
            "gold": args.gold.display().to_string(),
            "pred": args.pred.display().to_string(),
            "heads": args.heads.as_ref().map(|p| p.display().to_string()),
            "matching": format!("{:?}", args.matching).to_lowercase(),
            "out": out.display().to_string(),
        }),
    )?;

    let gold = read_extractions_auto(&resolve_input(&args.gold)).map_err(input_err)?;
    let predictions = read_extractions_auto(&resolve_input(&args.pred)).map_err(input_err)?;
    let heads = match &args.heads {
        Some(path) => DependencyHeads::from_conllu(&resolve_input(path)).map_err(input_err)?,
        None => DependencyHeads::new(),
    };

    let (curve, summary) =
        evaluate(&predictions, &gold, &heads, args.matching).map_err(input_err)?;

    let mut csv = create_writer(&out.join("pr_curve.csv"))?;
    write_pr_csv(&mut csv, &curve).map_err(input_err)?;
    write_json(&out.join("summary.json"), &summary)?;

    println!(
        "eval: max_f1 {:.4}  f1@0 {:.4}  auc {:.4}  ({} predictions, {} gold) -> {}",
        summary.max_f1,
        summary.f1_at_zero,
        summary.auc,
        summary.num_predictions,
        summary.num_gold,
        out.display()
    );
    Ok(())
}
