//! `codemix`: train the pipeline's models, tag corpora, and analyse results.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 bad input data,
//! 4 model load/training failure, 5 output write failure.

mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use codemix::eval::{
    confusion_report, load_merged, load_parallel, DEFAULT_LOG_BASE, DEFAULT_SCORE_CAP,
};
use codemix::langid::{load_lexicon, parse_language_tags, train_langid_with};
use codemix::pipeline::{Outcome, Pipeline, PipelineError, PipelineOutput};
use codemix::postag::{load_tagged_corpus, train_hmm, DEFAULT_SMOOTHING};
use codemix::segment::switch_stats;
use codemix::textprep::{ingest_corpus, CleanTweet, CorpusFormat};
use codemix::translit::{load_pairs, train_translit_with};
use codemix::{formats, DataError};
use codemix_nnet::{EpochMetrics, TrainReport};
use log::info;

use crate::config::Config;

#[derive(Parser)]
#[command(
    name = "codemix",
    version,
    about = "POS tagging for English-Bengali code-mixed tweets"
)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for training (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Log progress to stderr (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model and write it to disk.
    Train(TrainArgs),
    /// Run the full pipeline over a tweet corpus.
    Tag(TagArgs),
    /// Count language-switch bigrams in a language-tagged corpus.
    SwitchStats(SwitchArgs),
    /// Compare manual and system tags.
    Eval(EvalArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Subject {
    Langid,
    Translit,
    HmmEn,
    HmmBn,
}

#[derive(Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    #[default]
    Text,
    Records,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(value_enum)]
    subject: Subject,
    /// Lexicon TSV (langid), pair TSV (translit) or word/TAG corpus (hmm-*).
    #[arg(long)]
    data: PathBuf,
    /// Model output path.
    #[arg(long)]
    out: PathBuf,
    /// Per-epoch metrics TSV; defaults to `<out>.metrics.tsv`.
    #[arg(long)]
    metrics: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    validation_split: Option<f64>,
    /// Add-k smoothing for HMM taggers.
    #[arg(long)]
    smoothing: Option<f64>,
}

#[derive(Args)]
struct TagArgs {
    /// Tweet corpus.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    input_format: InputFormat,
    #[arg(long, value_enum, default_value = "text")]
    format: OutputFormat,
    /// Output path (stdout if absent).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write `id<TAB>reason` for every discarded tweet.
    #[arg(long)]
    discards: Option<PathBuf>,
    #[arg(long)]
    langid_model: Option<PathBuf>,
    #[arg(long)]
    translit_model: Option<PathBuf>,
    #[arg(long)]
    en_tagger: Option<PathBuf>,
    #[arg(long)]
    bn_tagger: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum InputFormat {
    Text,
    Records,
}

#[derive(Args)]
struct SwitchArgs {
    /// One tweet per line, tokens `surface\lang` (or `surface\lang\UTAG`).
    #[arg(long)]
    input: PathBuf,
    /// Comma-separated frequency thresholds.
    #[arg(long, value_delimiter = ',')]
    thresholds: Option<Vec<u64>>,
    #[arg(long, value_enum, default_value = "text")]
    format: OutputFormat,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Manually tagged sentences, or a merged JSONL file when `--system` is absent.
    #[arg(long)]
    manual: PathBuf,
    #[arg(long)]
    system: Option<PathBuf>,
    #[arg(long)]
    log_base: Option<f64>,
    #[arg(long, value_enum, default_value = "text")]
    format: OutputFormat,
    #[arg(long)]
    output: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Data(String),
    Model(String),
    Output(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Data(_) => 3,
            Failure::Model(_) => 4,
            Failure::Output(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Data(m) | Failure::Model(m) | Failure::Output(m) => m,
        }
    }
}

impl From<DataError> for Failure {
    fn from(e: DataError) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Config(m) => Failure::Config(m),
            PipelineError::Data(d) => d.into(),
            e @ PipelineError::Model { .. } => Failure::Model(e.to_string()),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: Cli) -> CmdResult {
    let config = match &cli.config {
        Some(p) => Config::load(p).map_err(Failure::Config)?,
        None => Config::default(),
    };
    let seed = cli.seed.or(config.seed);
    match cli.command {
        Command::Train(a) => train(&config, seed, a),
        Command::Tag(a) => tag(&config, a),
        Command::SwitchStats(a) => switch(&config, a),
        Command::Eval(a) => eval(&config, a),
    }
}

/// Opens `path` or stdout for writing.
fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    match path {
        Some(p) => File::create(p)
            .map(|f| Box::new(BufWriter::new(f)) as Box<dyn Write>)
            .map_err(|e| Failure::Output(format!("cannot create {}: {e}", p.display()))),
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

fn write_err(e: io::Error) -> Failure {
    Failure::Output(format!("write failed: {e}"))
}

fn metrics_row(m: &EpochMetrics) -> String {
    let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"));
    format!(
        "{}\t{:.6}\t{:.6}\t{}\t{}",
        m.epoch,
        m.train_loss,
        m.train_accuracy,
        opt(m.validation_loss),
        opt(m.validation_accuracy)
    )
}

fn write_metrics(path: &Path, report: &TrainReport) -> CmdResult {
    let mut out = sink(Some(path))?;
    writeln!(
        out,
        "epoch\ttrain_loss\ttrain_accuracy\tval_loss\tval_accuracy"
    )
    .map_err(write_err)?;
    for m in &report.epochs {
        writeln!(out, "{}", metrics_row(m)).map_err(write_err)?;
    }
    out.flush().map_err(write_err)
}

fn train(config: &Config, seed: Option<u64>, a: TrainArgs) -> CmdResult {
    let metrics_path = a.metrics.clone().unwrap_or_else(|| {
        let mut s = a.out.clone().into_os_string();
        s.push(".metrics.tsv");
        PathBuf::from(s)
    });
    let print = |m: &EpochMetrics| println!("{}", metrics_row(m));
    let report = match a.subject {
        Subject::Langid | Subject::Translit => {
            let section = match a.subject {
                Subject::Langid => &config.train.langid,
                _ => &config.train.translit,
            };
            let base = match a.subject {
                Subject::Langid => codemix::langid::default_train_config(),
                _ => codemix::translit::default_train_config(),
            };
            let mut cfg = section.apply(base, seed);
            if let Some(v) = a.epochs {
                cfg.epochs = v;
            }
            if let Some(v) = a.batch_size {
                cfg.batch_size = v;
            }
            if let Some(v) = a.validation_split {
                cfg.validation_split = v;
            }
            cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
            println!("epoch\ttrain_loss\ttrain_accuracy\tval_loss\tval_accuracy");
            let report = if let Subject::Langid = a.subject {
                let lexicon = load_lexicon(&a.data)?;
                let (model, report) = train_langid_with(&lexicon, section.dims(), &cfg, print)
                    .map_err(|e| Failure::Model(e.to_string()))?;
                model
                    .save(&a.out)
                    .map_err(|e| Failure::Output(e.to_string()))?;
                report
            } else {
                let pairs = load_pairs(&a.data)?;
                let (model, report) = train_translit_with(&pairs, section.dims(), &cfg, print)
                    .map_err(|e| Failure::Model(e.to_string()))?;
                model
                    .save(&a.out)
                    .map_err(|e| Failure::Output(e.to_string()))?;
                report
            };
            Some(report)
        }
        Subject::HmmEn | Subject::HmmBn => {
            let k = a
                .smoothing
                .or(config.train.hmm.smoothing)
                .unwrap_or(DEFAULT_SMOOTHING);
            let corpus = load_tagged_corpus(&a.data)?;
            let tagger = train_hmm(&corpus, k)
                .map_err(|e| Failure::Data(format!("{}: {e}", a.data.display())))?;
            tagger
                .save(&a.out)
                .map_err(|e| Failure::Output(e.to_string()))?;
            println!(
                "sentences\t{}\ntags\t{}",
                corpus.len(),
                tagger.tags().join(" ")
            );
            None
        }
    };
    if let Some(report) = report {
        write_metrics(&metrics_path, &report)?;
        info!("metrics written to {}", metrics_path.display());
    }
    info!("model written to {}", a.out.display());
    Ok(())
}

fn tag(config: &Config, a: TagArgs) -> CmdResult {
    let mut config = config.clone();
    let p = &mut config.pipeline;
    for (flag, slot) in [
        (a.langid_model, &mut p.langid_model),
        (a.translit_model, &mut p.translit_model),
        (a.en_tagger, &mut p.en_tagger),
        (a.bn_tagger, &mut p.bn_tagger),
    ] {
        if let Some(path) = flag {
            // Flag paths are relative to the working directory, not the config file.
            *slot = Some(std::path::absolute(&path).unwrap_or(path));
        }
    }
    let pipeline_cfg = config.pipeline().map_err(Failure::Config)?;
    let pipeline = Pipeline::load(&pipeline_cfg)?;
    let format = match a.input_format {
        InputFormat::Text => CorpusFormat::Text,
        InputFormat::Records => CorpusFormat::Records,
    };
    let tweets = ingest_corpus(&a.input, format)?;
    let output = pipeline.run(&tweets);
    let mut out = sink(a.output.as_deref())?;
    render_output(&mut out, &output, a.format).map_err(write_err)?;
    out.flush().map_err(write_err)?;
    if let Some(path) = &a.discards {
        let mut d = sink(Some(path))?;
        for o in &output.outcomes {
            if let Outcome::Discarded(x) = o {
                writeln!(d, "{}\t{}", x.id, x.reason.as_str()).map_err(write_err)?;
            }
        }
        d.flush().map_err(write_err)?;
    }
    Ok(())
}

/// Text: one `surface\lang\UTAG` line per kept tweet, then `# `-prefixed
/// summary lines. Records: one JSON object per token, then one summary object.
fn render_output(
    out: &mut dyn Write,
    output: &PipelineOutput,
    format: OutputFormat,
) -> io::Result<()> {
    for o in &output.outcomes {
        if let Outcome::Tagged(t) = o {
            match format {
                OutputFormat::Text => writeln!(out, "{}", t.to_text())?,
                OutputFormat::Records => {
                    for r in t.records() {
                        writeln!(out, "{}", serde_json::to_string(&r)?)?;
                    }
                }
            }
        }
    }
    let s = &output.summary;
    match format {
        OutputFormat::Text => {
            for (label, n) in s.rows() {
                writeln!(out, "# {label}\t{n}")?;
            }
        }
        OutputFormat::Records => writeln!(out, "{}", serde_json::json!({ "summary": s }))?,
    }
    Ok(())
}

fn json_line<T: serde::Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string(value)
        .map(|s| s + "\n")
        .map_err(|e| Failure::Output(e.to_string()))
}

fn read_tagged_corpus(path: &Path) -> Result<Vec<CleanTweet>, Failure> {
    let origin = path.display().to_string();
    let text = formats::read_text(path)?;
    formats::data_lines(&text)
        .map(|(n, line)| {
            parse_language_tags(line)
                .map(|tokens| CleanTweet {
                    id: n.to_string(),
                    tokens,
                })
                .map_err(|e| DataError::parse(&origin, n, e).into())
        })
        .collect()
}

fn switch(config: &Config, a: SwitchArgs) -> CmdResult {
    let thresholds = a
        .thresholds
        .or_else(|| config.thresholds.clone())
        .unwrap_or_else(|| vec![500, 1000]);
    let corpus = read_tagged_corpus(&a.input)?;
    let report = switch_stats(&corpus, &thresholds);
    let mut out = sink(a.output.as_deref())?;
    let body = match a.format {
        OutputFormat::Text => report.to_table(),
        OutputFormat::Records => json_line(&report)?,
    };
    out.write_all(body.as_bytes()).map_err(write_err)?;
    out.flush().map_err(write_err)
}

fn eval(config: &Config, a: EvalArgs) -> CmdResult {
    let log_base = a.log_base.or(config.log_base).unwrap_or(DEFAULT_LOG_BASE);
    codemix::eval::check_log_base(log_base).map_err(|e| Failure::Config(e.to_string()))?;
    let cap = config.score_cap.unwrap_or(DEFAULT_SCORE_CAP);
    let pairs = match &a.system {
        Some(system) => load_parallel(&a.manual, system),
        None => load_merged(&a.manual),
    }
    .map_err(|e| Failure::Data(e.to_string()))?;
    let report =
        confusion_report(&pairs, log_base, cap).map_err(|e| Failure::Data(e.to_string()))?;
    let mut out = sink(a.output.as_deref())?;
    let body = match a.format {
        OutputFormat::Text => report.to_table(),
        OutputFormat::Records => json_line(&report)?,
    };
    out.write_all(body.as_bytes()).map_err(write_err)?;
    out.flush().map_err(write_err)
}
