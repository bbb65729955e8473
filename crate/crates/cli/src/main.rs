//! `lexschema`: batch linearization, delinearization, constrained decoding,
//! evaluation and sample-corpus generation.
//!
//! Exit status is 0 when every record went through without a strict error,
//! 1 when some record failed, and 2 for usage, configuration and I/O errors.
//! Every failure is also reported as one JSON object per line on stderr.

mod config;
mod formats;

use std::io::{Read as _, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use lexschema::eval::{evaluate, stratify, Pair};
use lexschema::scorer::DEFAULT_TIMEOUT;
use lexschema::synth::{grammar_corpus, SAMPLE_SEED, SAMPLE_SIZE};
use lexschema::{
    decode, Codec, CorpusRecord, DecodeConfig, DecodeError, EvalError, ExternalScorer, IoError, OracleScorer,
    OutputSequence, RandomScorer, Scorer, ScorerError, Stratifier, Structure, Task,
};
use rayon::prelude::*;
use serde_json::json;
use thiserror::Error;

use config::{FileConfig, SchemaChoice, ScorerChoice};
use formats::Format;

#[derive(Debug, Parser)]
#[command(name = "lexschema", version, about = "Linearize, decode and evaluate structured predictions")]
struct Cli {
    /// TOML file with defaults for any flag (keys use `_` for `-`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write one output sequence per record.
    Linearize {
        #[command(flatten)]
        schema: SchemaArgs,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Read output sequences back into structures.
    Delinearize {
        #[command(flatten)]
        schema: SchemaArgs,
        #[command(flatten)]
        io: IoArgs,
        /// Output sequences, one per line, aligned with the input corpus.
        #[arg(long)]
        sequences: PathBuf,
        /// Repair malformed sequences instead of dropping them.
        #[arg(long)]
        lenient: bool,
    },
    /// Generate output sequences with a scorer and read them back.
    Decode {
        #[command(flatten)]
        schema: SchemaArgs,
        #[command(flatten)]
        decode: DecodeArgs,
        #[command(flatten)]
        io: IoArgs,
        /// Also write the generated sequences here, one per line.
        #[arg(long)]
        sequences_out: Option<PathBuf>,
        /// Repair sequences that fail to read back strictly.
        #[arg(long)]
        lenient: bool,
    },
    /// Score predicted structures against gold ones.
    Eval {
        #[arg(long)]
        task: Option<String>,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        /// Format of the gold file; predictions are always JSON lines.
        #[arg(long)]
        input_format: Option<String>,
        /// Break results down by oov, unseen, length or distance.
        #[arg(long)]
        stratify: Option<String>,
        /// Bucket edges, comma separated.
        #[arg(long, value_delimiter = ',')]
        edges: Option<Vec<f64>>,
        /// Training corpus supplying the vocabulary or entity list for oov and
        /// unseen.
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Write the synthetic sample corpus.
    Synth {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        size: Option<usize>,
        /// jsonl, ptb, conll-ner or conll-dep.
        #[arg(long, default_value = "jsonl")]
        format: String,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct SchemaArgs {
    /// pos, ner, con or dep.
    #[arg(long)]
    pub task: Option<String>,
    /// ls, lt or pt.
    #[arg(long)]
    pub schema: Option<String>,
    /// default, dec-lex, inc-vrb or paper-table-1.
    #[arg(long)]
    pub variant: Option<String>,
    /// default, paper-table-1 or conll03.
    #[arg(long)]
    pub profile: Option<String>,
    /// Arc symbols for dependency sequences: arrows or named.
    #[arg(long)]
    pub notation: Option<String>,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[arg(long, conflicts_with = "unconstrained")]
    pub constrained: bool,
    #[arg(long)]
    pub unconstrained: bool,
    /// oracle, random or external:<command>.
    #[arg(long)]
    pub scorer: Option<String>,
    /// greedy, sample or beam.
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long)]
    pub beam_width: Option<usize>,
    /// Symbol budget per sentence, end symbol included.
    #[arg(long)]
    pub max_len: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Seconds an external scorer gets per request.
    #[arg(long)]
    pub timeout_secs: Option<u64>,
}

#[derive(Debug, Args)]
pub struct IoArgs {
    /// Input corpus; `-` or absent reads stdin.
    #[arg(long, short)]
    input: Option<PathBuf>,
    /// jsonl, ptb, conll-ner or conll-dep.
    #[arg(long)]
    input_format: Option<String>,
    /// Output file; absent writes stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("missing --{0} (give it as a flag or in the config file)")]
    Missing(&'static str),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Input { path: PathBuf, source: IoError },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error("{0}")]
    Mismatch(String),
    #[error("scorer failed at record {id}: {message}")]
    BrokenScorer { id: String, message: String },
    #[error("{failed} of {total} records failed")]
    Records { failed: usize, total: usize },
}

impl CliError {
    pub fn read(path: &Path, source: std::io::Error) -> Self {
        CliError::Read {
            path: path.to_path_buf(),
            source,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) | CliError::Missing(_) => "config",
            CliError::Read { .. } | CliError::Write { .. } => "io",
            CliError::Input { .. } => "input",
            CliError::Eval(_) => "eval",
            CliError::Scorer(_) | CliError::BrokenScorer { .. } => "scorer",
            CliError::Mismatch(_) => "mismatch",
            CliError::Records { .. } => "records",
        }
    }
}

/// A per-record failure, printed as one JSON line on stderr.
#[derive(Debug)]
struct RecordError {
    index: usize,
    id: String,
    stage: &'static str,
    message: String,
}

impl RecordError {
    fn report(&self) {
        eprintln!(
            "{}",
            json!({"record": self.index, "id": self.id, "stage": self.stage, "error": self.message})
        );
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({"error": e.to_string(), "kind": e.kind()}));
            match e {
                CliError::Records { .. } => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Linearize { schema, io } => cmd_linearize(&SchemaChoice::resolve(&schema, &file)?, &io, &file),
        Command::Delinearize {
            schema,
            io,
            sequences,
            lenient,
        } => {
            let choice = SchemaChoice::resolve(&schema, &file)?;
            cmd_delinearize(&choice, &io, &file, &sequences, lenient || file.lenient.unwrap_or(false))
        }
        Command::Decode {
            schema,
            decode,
            io,
            sequences_out,
            lenient,
        } => {
            let choice = SchemaChoice::resolve(&schema, &file)?;
            let lenient = lenient || file.lenient.unwrap_or(false);
            cmd_decode(&choice, &decode, &io, &file, sequences_out.as_deref(), lenient)
        }
        Command::Eval {
            task,
            gold,
            pred,
            input_format,
            stratify,
            edges,
            reference,
            json,
            output,
        } => {
            let task: Task = config::pick("task", task.as_ref(), file.task.as_ref())?.ok_or(CliError::Missing("task"))?;
            let format = input_format_of(input_format.as_ref(), &file)?;
            let factor = config::factor(stratify.as_ref(), &file)?;
            let edges = edges.or_else(|| file.edges.clone());
            let reference = reference.or_else(|| file.reference.clone());
            let report = cmd_eval(task, &gold, format, &pred, factor, edges, reference.as_deref())?;
            let text = if json {
                let mut s = serde_json::to_string_pretty(&report).expect("reports serialize");
                s.push('\n');
                s
            } else {
                report.to_text()
            };
            write_output(output.as_deref(), &text)
        }
        Command::Synth {
            seed,
            size,
            format,
            output,
        } => {
            let format: Format = format.parse().map_err(CliError::Config)?;
            let records = grammar_corpus(seed.or(file.seed).unwrap_or(SAMPLE_SEED), size.unwrap_or(SAMPLE_SIZE));
            let text = formats::write(&records, format).map_err(CliError::Mismatch)?;
            write_output(output.as_deref(), &text)
        }
    }
}

fn input_format_of(flag: Option<&String>, file: &FileConfig) -> Result<Format, CliError> {
    Ok(config::pick("input-format", flag, file.input_format.as_ref())?.unwrap_or(Format::Jsonl))
}

fn read_text(path: Option<&Path>) -> Result<String, CliError> {
    match path {
        Some(p) if p != Path::new("-") => std::fs::read_to_string(p).map_err(|e| CliError::read(p, e)),
        _ => {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| CliError::read(Path::new("<stdin>"), e))?;
            Ok(s)
        }
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) if p != Path::new("-") => std::fs::write(p, text).map_err(|source| CliError::Write {
            path: p.to_path_buf(),
            source,
        }),
        _ => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Write {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

fn read_corpus(path: Option<&Path>, format: Format) -> Result<Vec<CorpusRecord>, CliError> {
    let text = read_text(path)?;
    let (records, notes) = formats::read(&text, format).map_err(|source| CliError::Input {
        path: path.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("<stdin>")),
        source,
    })?;
    for note in notes {
        eprintln!("{}", json!({"warning": note}));
    }
    Ok(records)
}

fn codec(choice: &SchemaChoice) -> Result<Codec, CliError> {
    Codec::new(choice.task, choice.options()).map_err(|e| CliError::Config(e.to_string()))
}

fn gold_structure(record: &CorpusRecord, task: Task) -> Result<Structure, String> {
    record
        .structure(task)
        .ok_or_else(|| format!("record has no {task} structure"))
}

/// Reports every record error and turns a non-empty list into the exit
/// status error.
fn finish(errors: Vec<RecordError>, total: usize) -> Result<(), CliError> {
    for e in &errors {
        e.report();
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(CliError::Records {
            failed: errors.len(),
            total,
        })
    }
}

fn cmd_linearize(choice: &SchemaChoice, io: &IoArgs, file: &FileConfig) -> Result<(), CliError> {
    let codec = codec(choice)?;
    let records = read_corpus(io.input.as_deref(), input_format_of(io.input_format.as_ref(), file)?)?;
    let results: Vec<Result<OutputSequence, String>> = records
        .par_iter()
        .map(|r| {
            let gold = gold_structure(r, choice.task)?;
            codec.linearize(&r.sentence, &gold).map_err(|e| e.to_string())
        })
        .collect();
    let mut text = String::new();
    let mut errors = Vec::new();
    for (index, (r, result)) in records.iter().zip(results).enumerate() {
        match result {
            Ok(seq) => text.push_str(&seq.to_text()),
            Err(message) => errors.push(RecordError {
                index,
                id: r.id.clone(),
                stage: "linearize",
                message,
            }),
        }
        text.push('\n');
    }
    write_output(io.output.as_deref(), &text)?;
    finish(errors, records.len())
}

/// Structures read back from one sequence: the strict reading, or the
/// strict error plus a lenient repair when one was asked for.
fn read_back(
    codec: &Codec,
    record: &CorpusRecord,
    seq: &OutputSequence,
    lenient: bool,
) -> (Option<Structure>, Option<String>) {
    match codec.delinearize(&record.sentence, seq, false) {
        Ok(s) => (Some(s), None),
        Err(strict) => {
            let repaired = if lenient {
                codec.delinearize(&record.sentence, seq, true).ok()
            } else {
                None
            };
            (repaired, Some(strict.to_string()))
        }
    }
}

fn predicted_record(record: &CorpusRecord, structure: Option<Structure>) -> CorpusRecord {
    let mut out = CorpusRecord::new(record.id.clone(), record.sentence.clone());
    if let Some(s) = structure {
        out.set_structure(s);
    }
    out
}

fn cmd_delinearize(
    choice: &SchemaChoice,
    io: &IoArgs,
    file: &FileConfig,
    sequences: &Path,
    lenient: bool,
) -> Result<(), CliError> {
    let codec = codec(choice)?;
    let records = read_corpus(io.input.as_deref(), input_format_of(io.input_format.as_ref(), file)?)?;
    let text = std::fs::read_to_string(sequences).map_err(|e| CliError::read(sequences, e))?;
    let lines: Vec<&str> = text.lines().collect();
    if lines.len() != records.len() {
        return Err(CliError::Mismatch(format!(
            "{} has {} lines but the corpus has {} records",
            sequences.display(),
            lines.len(),
            records.len()
        )));
    }
    let results: Vec<(Option<Structure>, Option<String>)> = records
        .par_iter()
        .zip(lines.par_iter())
        .map(|(r, line)| match OutputSequence::parse(line) {
            Ok(seq) => read_back(&codec, r, &seq, lenient),
            Err(e) => (None, Some(e.to_string())),
        })
        .collect();
    let mut out = Vec::with_capacity(records.len());
    let mut errors = Vec::new();
    for (index, (r, (structure, error))) in records.iter().zip(results).enumerate() {
        if let Some(message) = error {
            errors.push(RecordError {
                index,
                id: r.id.clone(),
                stage: "delinearize",
                message,
            });
        }
        out.push(predicted_record(r, structure));
    }
    write_output(io.output.as_deref(), &lexschema::io::write_jsonl(&out))?;
    finish(errors, records.len())
}

#[derive(Debug)]
struct Decoded {
    sequence: Option<OutputSequence>,
    structure: Option<Structure>,
    error: Option<(&'static str, String)>,
    /// The scorer can no longer be trusted to answer in step.
    broken_scorer: bool,
}

fn decode_one(
    codec: &Codec,
    record: &CorpusRecord,
    scorer: &mut dyn Scorer,
    config: &DecodeConfig,
    lenient: bool,
) -> Decoded {
    match decode(codec, &record.sentence, scorer, config) {
        Err(e) => Decoded {
            sequence: None,
            structure: None,
            broken_scorer: matches!(
                e,
                DecodeError::Scorer(ScorerError::Exited | ScorerError::Timeout(_) | ScorerError::Io(_))
            ),
            error: Some(("decode", e.to_string())),
        },
        Ok(seq) => {
            let (structure, error) = read_back(codec, record, &seq, lenient);
            Decoded {
                sequence: Some(seq),
                structure,
                error: error.map(|e| ("delinearize", e)),
                broken_scorer: false,
            }
        }
    }
}

fn cmd_decode(
    choice: &SchemaChoice,
    args: &DecodeArgs,
    io: &IoArgs,
    file: &FileConfig,
    sequences_out: Option<&Path>,
    lenient: bool,
) -> Result<(), CliError> {
    let codec = codec(choice)?;
    let records = read_corpus(io.input.as_deref(), input_format_of(io.input_format.as_ref(), file)?)?;
    let scorer: ScorerChoice =
        config::pick("scorer", args.scorer.as_ref(), file.scorer.as_ref())?.unwrap_or(ScorerChoice::Random);
    let mode = config::mode(args, file);
    let strategy = config::strategy(args, file)?;
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let max_len = args.max_len.or(file.max_len);
    let config_for = |index: usize| {
        let mut c = DecodeConfig::new(mode, strategy.for_record(record_seed(seed, index)));
        c.max_len = max_len;
        c
    };
    if let Err(e) = config_for(0).validate() {
        return Err(CliError::Config(e.to_string()));
    }
    let oracle = |record: &CorpusRecord| -> Result<OracleScorer, String> {
        let gold = gold_structure(record, choice.task)?;
        let seq = codec.linearize(&record.sentence, &gold).map_err(|e| e.to_string())?;
        Ok(OracleScorer::new(seq))
    };
    let failed = |stage: &'static str, message: String| Decoded {
        sequence: None,
        structure: None,
        error: Some((stage, message)),
        broken_scorer: false,
    };
    let results: Vec<Decoded> = match &scorer {
        ScorerChoice::External(command) => {
            let timeout = args
                .timeout_secs
                .or(file.timeout_secs)
                .map(Duration::from_secs)
                .unwrap_or(DEFAULT_TIMEOUT);
            let mut external = ExternalScorer::spawn(command, timeout)?;
            let mut out = Vec::with_capacity(records.len());
            for (i, r) in records.iter().enumerate() {
                let d = decode_one(&codec, r, &mut external, &config_for(i), lenient);
                // A scorer that died or fell out of step cannot serve the
                // remaining records.
                if d.broken_scorer {
                    let (_, message) = d.error.unwrap_or_default();
                    return Err(CliError::BrokenScorer {
                        id: r.id.clone(),
                        message,
                    });
                }
                out.push(d);
            }
            out
        }
        ScorerChoice::Oracle => records
            .par_iter()
            .enumerate()
            .map(|(i, r)| match oracle(r) {
                Ok(mut s) => decode_one(&codec, r, &mut s, &config_for(i), lenient),
                Err(e) => failed("oracle", e),
            })
            .collect(),
        ScorerChoice::Random => records
            .par_iter()
            .enumerate()
            .map(|(i, r)| {
                let mut s = RandomScorer::new(record_seed(seed, i));
                decode_one(&codec, r, &mut s, &config_for(i), lenient)
            })
            .collect(),
    };

    let mut structures = Vec::with_capacity(records.len());
    let mut sequences = String::new();
    let mut errors = Vec::new();
    for (index, (r, d)) in records.iter().zip(results).enumerate() {
        if let Some(seq) = &d.sequence {
            sequences.push_str(&seq.to_text());
        }
        sequences.push('\n');
        if let Some((stage, message)) = d.error {
            errors.push(RecordError {
                index,
                id: r.id.clone(),
                stage,
                message,
            });
        }
        structures.push(predicted_record(r, d.structure));
    }
    write_output(io.output.as_deref(), &lexschema::io::write_jsonl(&structures))?;
    if let Some(path) = sequences_out {
        write_output(Some(path), &sequences)?;
    }
    let total = records.len();
    let rate = if total == 0 {
        0.0
    } else {
        100.0 * errors.len() as f64 / total as f64
    };
    eprintln!(
        "{}",
        json!({"summary": {
            "task": choice.task.name(),
            "schema": choice.kind.name(),
            "mode": mode,
            "records": total,
            "strict_failures": errors.len(),
            "strict_failure_rate": rate,
        }})
    );
    finish(errors, total)
}

/// Seed for record `index`, so results do not depend on scheduling.
fn record_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index as u64)
}

fn cmd_eval(
    task: Task,
    gold_path: &Path,
    gold_format: Format,
    pred_path: &Path,
    factor: Option<lexschema::FactorKind>,
    edges: Option<Vec<f64>>,
    reference: Option<&Path>,
) -> Result<lexschema::EvalReport, CliError> {
    let gold = read_corpus(Some(gold_path), gold_format)?;
    let pred = read_corpus(Some(pred_path), Format::Jsonl)?;
    if gold.len() != pred.len() {
        return Err(EvalError::CorpusLength {
            gold: gold.len(),
            pred: pred.len(),
        }
        .into());
    }
    let mut structures = Vec::with_capacity(gold.len());
    for (i, (g, p)) in gold.iter().zip(&pred).enumerate() {
        if g.sentence != p.sentence {
            return Err(CliError::Mismatch(format!(
                "record {i}: gold and predicted sentences differ ({} vs {})",
                g.id, p.id
            )));
        }
        let gs = gold_structure(g, task).map_err(|e| CliError::Mismatch(format!("gold record {}: {e}", g.id)))?;
        let ps = gold_structure(p, task).map_err(|e| CliError::Mismatch(format!("predicted record {}: {e}", p.id)))?;
        structures.push((gs, ps));
    }
    let pairs: Vec<Pair<'_>> = gold
        .iter()
        .zip(&structures)
        .map(|(g, (gs, ps))| Pair {
            sentence: &g.sentence,
            gold: gs,
            pred: ps,
        })
        .collect();
    let Some(factor) = factor else {
        return Ok(evaluate(task, &pairs)?);
    };
    let mut stratifier = Stratifier::new(factor);
    if let Some(edges) = edges {
        stratifier = stratifier.with_edges(edges);
    }
    if factor.needs_reference() {
        let path = reference.ok_or_else(|| CliError::Config(format!("--stratify {factor} needs --reference")))?;
        let train = read_corpus(Some(path), Format::Jsonl)?;
        stratifier = match factor {
            lexschema::FactorKind::Unseen => stratifier.with_reference(train.iter().flat_map(|r| {
                r.ner
                    .iter()
                    .flat_map(|set| set.entities.iter())
                    .map(|e| r.sentence.tokens()[e.start..e.end].join(" "))
                    .collect::<Vec<_>>()
            })),
            _ => stratifier.with_reference(train.iter().flat_map(|r| r.sentence.tokens().to_vec())),
        };
    }
    Ok(stratify(task, &pairs, &stratifier)?)
}

