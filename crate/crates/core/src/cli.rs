//! `chartloop` command line. Exit codes: 0 ok, 2 usage or input error,
//! 3 backend failure, 4 empty result.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::controller::{
    BackendError, EpisodeConfig, EpisodeRecord, HttpConfig, HttpReader, HttpReasoner, OracleReader,
    PromptStyle, ReaderBackend, ReasonerBackend, ScriptedReasoner, SelfConsistencyConfig,
};
use crate::eval::{evaluate_run, records_to_csv, EvalReport};
use crate::model::{validate_edges, ChartTable, QAInstance, Termination, TemplateType};
use crate::oracle::TableOracle;
use crate::pipeline::{
    examples_from_records, export_system1_sft, export_system2_sft, generate_questions, generate_system1_corpus,
    load_corpus, parse_annotated_file, run_questions, sample_eval_set, score_records, synth_tables,
    write_internal_jsonl, Corpus, CorpusEntry, CorpusFormat, SynthOptions,
};
use crate::symbolic::SymbolicReasoner;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_BACKEND: u8 = 3;
pub const EXIT_EMPTY: u8 = 4;

pub const RUN_CONFIG_FILE: &str = "run_config.json";

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub error: anyhow::Error,
}

impl CliError {
    fn input(e: impl Into<anyhow::Error>) -> Self {
        CliError {
            code: EXIT_INPUT,
            error: e.into(),
        }
    }

    fn backend(e: impl Into<anyhow::Error>) -> Self {
        CliError {
            code: EXIT_BACKEND,
            error: e.into(),
        }
    }

    fn empty(msg: impl Into<String>) -> Self {
        CliError {
            code: EXIT_EMPTY,
            error: anyhow!(msg.into()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn io_err(e: impl Into<anyhow::Error>) -> CliError {
    CliError::input(e)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    /// HTTP reasoner against the table oracle reader.
    Oracle,
    /// Rule-based reasoner against the table oracle reader.
    Symbolic,
    /// HTTP reasoner and HTTP reader.
    Http,
    /// Replayed reasoner lines against the oracle (or an HTTP reader).
    Scripted,
}

#[derive(Debug, Parser)]
#[command(name = "chartloop", version, about = "Interleaved reasoner/reader chart QA harness")]
pub struct Cli {
    #[command(flatten)]
    pub shared: SharedArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Default, Args)]
pub struct SharedArgs {
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON settings file; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub backend: Option<BackendKind>,
    #[arg(long, global = true)]
    pub reasoner_url: Option<String>,
    #[arg(long, global = true)]
    pub reader_url: Option<String>,
    /// Model name forwarded to the reasoner endpoint.
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// Self-consistency samples; 1 runs a single greedy episode.
    #[arg(long, global = true)]
    pub sc: Option<usize>,
    #[arg(long, global = true)]
    pub temperature: Option<f64>,
    #[arg(long, global = true)]
    pub no_describe: bool,
    #[arg(long, global = true)]
    pub prompt_style: Option<PromptStyle>,
    /// Table-length bucket edges, e.g. 0,10,20,40.
    #[arg(long, global = true, value_delimiter = ',')]
    pub buckets: Option<Vec<usize>>,
    #[arg(long, global = true)]
    pub max_steps: Option<usize>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reader training pairs (and optionally template questions) from a corpus.
    Datagen(DatagenArgs),
    /// One question against one chart; prints the trace.
    Run(RunArgs),
    /// Runs and scores an evaluation set.
    Eval(EvalArgs),
    /// Loss-masked reasoner fine-tuning data from traces or annotations.
    ExportFt(ExportArgs),
    /// Re-scores a traces file.
    Report(ReportArgs),
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct CorpusArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, default_value = "internal_json")]
    pub format: String,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct DatagenArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Generate this many synthetic charts instead of reading a corpus.
    #[arg(long, conflicts_with = "corpus")]
    pub synth: Option<usize>,
    /// Also write template questions with brute-force gold answers.
    #[arg(long)]
    pub questions: bool,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct RunArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub chart: String,
    #[arg(long)]
    pub question: String,
    /// Reasoner lines for the scripted backend (JSON list).
    #[arg(long)]
    pub script: Option<PathBuf>,
    #[arg(long)]
    pub gold: Option<String>,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct EvalArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// QAInstance JSONL; defaults to the questions attached to the corpus.
    #[arg(long)]
    pub qa: Option<PathBuf>,
    /// Generate template questions over the corpus charts.
    #[arg(long)]
    pub generate: bool,
    /// Restrict generated questions to these types.
    #[arg(long, value_delimiter = ',')]
    pub template_types: Option<Vec<String>>,
    /// Evaluate a seeded random subset of this size.
    #[arg(long)]
    pub sample: Option<usize>,
    #[arg(long)]
    pub script: Option<PathBuf>,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct ExportArgs {
    /// Traces JSONL, annotation .txt, or a directory of them.
    #[arg(long)]
    pub input: PathBuf,
    /// Add an [INST]-tagged rendering of each example.
    #[arg(long)]
    pub tagged: bool,
    /// Keep only traces whose answer matches gold.
    #[arg(long)]
    pub correct_only: bool,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct ReportArgs {
    #[arg(long)]
    pub traces: PathBuf,
    /// Corpus for table lengths.
    #[command(flatten)]
    pub corpus: CorpusArgs,
}

/// Settings file schema; every field optional.
#[derive(Debug, Default, Deserialize)]
struct ConfigFile {
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
    backend: Option<BackendKind>,
    reasoner_url: Option<String>,
    reader_url: Option<String>,
    model: Option<String>,
    sc: Option<usize>,
    temperature: Option<f64>,
    no_describe: Option<bool>,
    prompt_style: Option<PromptStyle>,
    buckets: Option<Vec<usize>>,
    max_steps: Option<usize>,
    workers: Option<usize>,
}

/// Resolved shared settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub backend: BackendKind,
    pub reasoner_url: Option<String>,
    pub reader_url: Option<String>,
    pub model: Option<String>,
    pub sc: usize,
    pub temperature: f64,
    pub no_describe: bool,
    pub prompt_style: PromptStyle,
    pub buckets: Vec<usize>,
    pub max_steps: usize,
    pub workers: Option<usize>,
}

pub const DEFAULT_BUCKETS: [usize; 4] = [0, 10, 20, 40];

impl Settings {
    /// Flags over config file over defaults.
    pub fn resolve(flags: &SharedArgs) -> anyhow::Result<Settings> {
        let file: ConfigFile = match &flags.config {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => ConfigFile::default(),
        };
        let episode = EpisodeConfig::default();
        let sc = flags.sc.or(file.sc).unwrap_or(1);
        if sc == 0 {
            return Err(anyhow!("--sc must be at least 1"));
        }
        let default_temperature = if sc > 1 {
            SelfConsistencyConfig::default().temperature
        } else {
            episode.temperature
        };
        let buckets = flags
            .buckets
            .clone()
            .or(file.buckets)
            .unwrap_or_else(|| DEFAULT_BUCKETS.to_vec());
        validate_edges(&buckets).context("--buckets")?;
        Ok(Settings {
            seed: flags.seed.or(file.seed).unwrap_or(0),
            out_dir: flags
                .out_dir
                .clone()
                .or(file.out_dir)
                .unwrap_or_else(|| PathBuf::from("chartloop_out")),
            backend: flags.backend.or(file.backend).unwrap_or(BackendKind::Symbolic),
            reasoner_url: flags.reasoner_url.clone().or(file.reasoner_url),
            reader_url: flags.reader_url.clone().or(file.reader_url),
            model: flags.model.clone().or(file.model),
            sc,
            temperature: flags.temperature.or(file.temperature).unwrap_or(default_temperature),
            no_describe: flags.no_describe || file.no_describe.unwrap_or(false),
            prompt_style: flags.prompt_style.or(file.prompt_style).unwrap_or(episode.prompt_style),
            buckets,
            max_steps: flags.max_steps.or(file.max_steps).unwrap_or(episode.max_steps),
            workers: flags.workers.or(file.workers),
        })
    }

    pub fn episode_config(&self) -> EpisodeConfig {
        EpisodeConfig {
            max_steps: self.max_steps,
            describe_first: !self.no_describe,
            temperature: self.temperature,
            prompt_style: self.prompt_style,
            seed: Some(self.seed),
            ..EpisodeConfig::default()
        }
    }

    pub fn sc_config(&self) -> Option<SelfConsistencyConfig> {
        (self.sc > 1).then_some(SelfConsistencyConfig {
            n_samples: self.sc,
            temperature: self.temperature,
        })
    }
}

/// Everything needed to reproduce a run; written to the output directory.
/// Its shared keys double as a `--config` file.
#[derive(Serialize)]
struct RunConfig<'a, A: Serialize> {
    #[serde(flatten)]
    settings: &'a Settings,
    command: &'static str,
    args: &'a A,
    episode: EpisodeConfig,
    self_consistency: Option<SelfConsistencyConfig>,
}

fn write_run_config<A: Serialize>(settings: &Settings, command: &'static str, args: &A) -> CliResult<()> {
    fs::create_dir_all(&settings.out_dir)
        .with_context(|| format!("creating {}", settings.out_dir.display()))
        .map_err(io_err)?;
    let rc = RunConfig {
        settings,
        command,
        args,
        episode: settings.episode_config(),
        self_consistency: settings.sc_config(),
    };
    let text = serde_json::to_string_pretty(&rc).map_err(io_err)?;
    fs::write(settings.out_dir.join(RUN_CONFIG_FILE), text + "\n").map_err(io_err)
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .with_context(|| format!("creating {}", path.display()))
        .map_err(io_err)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(io_err)?;
    fs::write(path, text + "\n")
        .with_context(|| format!("writing {}", path.display()))
        .map_err(io_err)
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> CliResult<()> {
    let mut w = create(path)?;
    for it in items {
        let line = serde_json::to_string(it).map_err(io_err)?;
        writeln!(w, "{line}").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

fn load(args: &CorpusArgs) -> CliResult<Option<Corpus>> {
    let Some(path) = &args.corpus else {
        return Ok(None);
    };
    let format: CorpusFormat = args.format.parse().map_err(|e: String| CliError::input(anyhow!(e)))?;
    load_corpus(path, format).map(Some).map_err(CliError::input)
}

fn require_corpus(args: &CorpusArgs) -> CliResult<Corpus> {
    load(args)?.ok_or_else(|| CliError::input(anyhow!("--corpus is required")))
}

/// Reader wrapper remembering whether any call failed at the transport level.
struct Watched<R> {
    inner: R,
    failed: AtomicBool,
}

impl<R: ReaderBackend> ReaderBackend for Watched<R> {
    fn read(&self, chart_ref: &str, query: &str) -> Result<String, BackendError> {
        let r = self.inner.read(chart_ref, query);
        if let Err(BackendError::Transport(_)) = &r {
            self.failed.store(true, Ordering::Relaxed);
        }
        r
    }

    fn linearize(&self, chart_ref: &str) -> Option<String> {
        self.inner.linearize(chart_ref)
    }
}

struct Backends {
    reasoner: Box<dyn ReasonerBackend>,
    reader: Watched<Box<dyn ReaderBackend>>,
}

fn http_config(url: &Option<String>, what: &str, model: Option<String>) -> CliResult<HttpConfig> {
    let url = url
        .clone()
        .ok_or_else(|| CliError::input(anyhow!("--{what}-url is required for this backend")))?;
    let mut cfg = HttpConfig::new(url);
    cfg.model = model;
    Ok(cfg)
}

fn build_backends(settings: &Settings, charts: Option<Vec<ChartTable>>, script: Option<&Path>) -> CliResult<Backends> {
    let oracle_reader = |charts: Option<Vec<ChartTable>>| -> CliResult<Box<dyn ReaderBackend>> {
        let charts = charts.ok_or_else(|| CliError::input(anyhow!("the oracle reader needs --corpus")))?;
        Ok(Box::new(OracleReader::new(Arc::new(TableOracle::new(charts)))))
    };
    let (reasoner, reader): (Box<dyn ReasonerBackend>, Box<dyn ReaderBackend>) = match settings.backend {
        BackendKind::Symbolic => (
            Box::new(SymbolicReasoner::new(!settings.no_describe)),
            oracle_reader(charts)?,
        ),
        BackendKind::Oracle => (
            Box::new(HttpReasoner::new(http_config(&settings.reasoner_url, "reasoner", settings.model.clone())?)),
            oracle_reader(charts)?,
        ),
        BackendKind::Http => (
            Box::new(HttpReasoner::new(http_config(&settings.reasoner_url, "reasoner", settings.model.clone())?)),
            Box::new(HttpReader::new(http_config(&settings.reader_url, "reader", None)?)),
        ),
        BackendKind::Scripted => {
            let path = script.ok_or_else(|| CliError::input(anyhow!("--script is required for the scripted backend")))?;
            let reasoner = ScriptedReasoner::from_path(path).map_err(CliError::input)?;
            let reader: Box<dyn ReaderBackend> = match &settings.reader_url {
                Some(_) => Box::new(HttpReader::new(http_config(&settings.reader_url, "reader", None)?)),
                None => oracle_reader(charts)?,
            };
            (Box::new(reasoner), reader)
        }
    };
    Ok(Backends {
        reasoner,
        reader: Watched {
            inner: reader,
            failed: AtomicBool::new(false),
        },
    })
}

fn cmd_datagen(settings: &Settings, args: &DatagenArgs) -> CliResult<()> {
    let entries: Vec<CorpusEntry> = match args.synth {
        Some(0) => return Err(CliError::input(anyhow!("--synth must be positive"))),
        Some(n) => synth_tables(n, settings.seed, &SynthOptions::default())
            .into_iter()
            .map(|chart| CorpusEntry { chart, qa: Vec::new() })
            .collect(),
        None => require_corpus(&args.corpus)?.entries,
    };
    write_run_config(settings, "datagen", args)?;
    let charts: Vec<ChartTable> = entries.iter().map(|e| e.chart.clone()).collect();
    let (pairs, manifest) = generate_system1_corpus(&charts, settings.seed);
    let out = &settings.out_dir;
    let mut w = create(&out.join("system1.jsonl"))?;
    export_system1_sft(&pairs, &mut w).map_err(io_err)?;
    w.flush().map_err(io_err)?;
    write_json(&out.join("manifest.json"), &manifest)?;
    println!(
        "charts {}  describe {}  point {}  group {}  total {}",
        manifest.n_charts,
        manifest.n_describe,
        manifest.n_point,
        manifest.n_group,
        manifest.total()
    );
    if args.questions || args.synth.is_some() {
        let mut entries = entries;
        if args.questions {
            let generated = generate_questions(&charts, &TemplateType::ALL, settings.seed);
            for e in &mut entries {
                e.qa.clear();
            }
            let index: std::collections::HashMap<&str, usize> =
                charts.iter().enumerate().map(|(i, c)| (c.id(), i)).collect();
            for qa in generated.qa {
                let i = index[qa.chart_id.as_str()];
                entries[i].qa.push(qa);
            }
            println!(
                "questions {}  skipped (chart, type) pairs {}",
                entries.iter().map(|e| e.qa.len()).sum::<usize>(),
                generated.skipped.len()
            );
        }
        let mut w = create(&out.join("charts.jsonl"))?;
        write_internal_jsonl(&entries, &mut w).map_err(io_err)?;
        w.flush().map_err(io_err)?;
    }
    Ok(())
}

fn print_trace(question: &str, record: &EpisodeRecord) {
    println!("Q: {question}");
    for (i, t) in record.traces.iter().enumerate() {
        if record.traces.len() > 1 {
            println!("-- sample {i} ({:?})", t.terminated_by);
        }
        for (j, s) in t.steps.iter().enumerate() {
            let prefix = if j == 0 { "A: " } else { "" };
            println!("{prefix}{}", s.text);
        }
    }
    match &record.final_answer {
        Some(a) => println!("final answer: {a}"),
        None => println!("final answer: none"),
    }
}

fn cmd_run(settings: &Settings, args: &RunArgs) -> CliResult<()> {
    let corpus = load(&args.corpus)?;
    let charts = corpus.as_ref().map(|c| c.charts().cloned().collect::<Vec<_>>());
    if let Some(charts) = &charts {
        if !charts.iter().any(|c| c.id() == args.chart) {
            return Err(CliError::input(anyhow!("chart {:?} not in corpus", args.chart)));
        }
    }
    write_run_config(settings, "run", args)?;
    let backends = build_backends(settings, charts, args.script.as_deref())?;
    let qa = QAInstance {
        question: args.question.clone(),
        gold: args
            .gold
            .as_deref()
            .map(crate::eval::normalize_answer)
            .unwrap_or_else(|| crate::model::Value::Text(String::new())),
        template_type: None,
        chart_id: args.chart.clone(),
    };
    let mut records = run_questions(
        std::slice::from_ref(&qa),
        &*backends.reasoner,
        &backends.reader,
        &settings.episode_config(),
        settings.sc_config().as_ref(),
    )
    .map_err(CliError::input)?;
    let mut record = records.remove(0);
    if args.gold.is_none() {
        record.gold = None;
    }
    print_trace(&args.question, &record);
    write_json(&settings.out_dir.join("trace.json"), &record)?;
    if backends.reader.failed.load(Ordering::Relaxed)
        || record.traces.iter().all(|t| t.terminated_by == Termination::BackendError)
    {
        return Err(CliError::backend(anyhow!("backend unreachable or failing")));
    }
    Ok(())
}

fn read_qa_jsonl(path: &Path) -> CliResult<Vec<QAInstance>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(io_err)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .with_context(|| format!("{}:{}", path.display(), i + 1))
                .map_err(io_err)
        })
        .collect()
}

fn write_report(settings: &Settings, report: &EvalReport) -> CliResult<()> {
    write_json(&settings.out_dir.join("report.json"), report)?;
    let text = report.to_text();
    fs::write(settings.out_dir.join("report.txt"), &text).map_err(io_err)?;
    print!("{text}");
    Ok(())
}

fn cmd_eval(settings: &Settings, args: &EvalArgs) -> CliResult<()> {
    let corpus = load(&args.corpus)?;
    let charts: Option<Vec<ChartTable>> = corpus.as_ref().map(|c| c.charts().cloned().collect());
    let mut qa: Vec<QAInstance> = if let Some(p) = &args.qa {
        read_qa_jsonl(p)?
    } else if args.generate {
        let charts = charts
            .as_ref()
            .ok_or_else(|| CliError::input(anyhow!("--generate needs --corpus")))?;
        let types = match &args.template_types {
            Some(ts) => ts
                .iter()
                .map(|t| t.parse::<TemplateType>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::input(anyhow!(e)))?,
            None => TemplateType::ALL.to_vec(),
        };
        generate_questions(charts, &types, settings.seed).qa
    } else {
        corpus.as_ref().map(|c| c.qa().cloned().collect()).unwrap_or_default()
    };
    if let Some(n) = args.sample {
        qa = sample_eval_set(&qa, n, settings.seed).map_err(CliError::input)?;
    }
    write_run_config(settings, "eval", args)?;
    if qa.is_empty() {
        return Err(CliError::empty("no questions to evaluate"));
    }
    let oracle = charts.clone().map(TableOracle::new);
    let backends = build_backends(settings, charts, args.script.as_deref())?;
    let records = run_questions(
        &qa,
        &*backends.reasoner,
        &backends.reader,
        &settings.episode_config(),
        settings.sc_config().as_ref(),
    )
    .map_err(CliError::input)?;
    write_jsonl(&settings.out_dir.join("traces.jsonl"), &records)?;
    if records
        .iter()
        .all(|r| r.traces.iter().all(|t| t.terminated_by == Termination::BackendError))
    {
        return Err(CliError::backend(anyhow!("every episode failed at the backend")));
    }
    let scored = score_records(&records, oracle.as_ref());
    if scored.is_empty() {
        return Err(CliError::empty("no scored records"));
    }
    fs::write(
        settings.out_dir.join("records.csv"),
        records_to_csv(&scored).map_err(io_err)?,
    )
    .map_err(io_err)?;
    let report = evaluate_run(&scored, &settings.buckets).map_err(CliError::input)?;
    write_report(settings, &report)
}

fn read_records(path: &Path) -> CliResult<Vec<EpisodeRecord>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(io_err)?;
    let mut out = Vec::new();
    for (i, l) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        match serde_json::from_str(l) {
            Ok(r) => out.push(r),
            Err(e) => log::warn!("{}:{}: {e}", path.display(), i + 1),
        }
    }
    Ok(out)
}

fn export_inputs(path: &Path) -> CliResult<Vec<PathBuf>> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .with_context(|| format!("reading {}", path.display()))
            .map_err(io_err)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        Ok(files)
    } else if path.is_file() {
        Ok(vec![path.to_path_buf()])
    } else {
        Err(CliError::input(anyhow!("{}: no such file or directory", path.display())))
    }
}

fn cmd_export_ft(settings: &Settings, args: &ExportArgs) -> CliResult<()> {
    let files = export_inputs(&args.input)?;
    write_run_config(settings, "export-ft", args)?;
    let mut examples = Vec::new();
    for f in &files {
        match f.extension().and_then(|e| e.to_str()) {
            Some("txt") => {
                let text = fs::read_to_string(f).map_err(io_err)?;
                examples.extend(parse_annotated_file(&text));
            }
            Some("jsonl") | Some("json") => {
                examples.extend(examples_from_records(&read_records(f)?, args.correct_only));
            }
            _ => log::warn!("{}: ignored (expected .txt or .jsonl)", f.display()),
        }
    }
    let mut w = create(&settings.out_dir.join("system2_sft.jsonl"))?;
    let summary = export_system2_sft(&examples, args.tagged, &mut w).map_err(io_err)?;
    w.flush().map_err(io_err)?;
    write_json(&settings.out_dir.join("export_summary.json"), &summary)?;
    let total = (summary.masked_chars + summary.unmasked_chars).max(1) as f64;
    println!(
        "examples {}  skipped {}  masked chars {} ({:.3})  unmasked chars {} ({:.3})",
        summary.n_examples,
        summary.n_skipped,
        summary.masked_chars,
        summary.masked_chars as f64 / total,
        summary.unmasked_chars,
        summary.unmasked_chars as f64 / total
    );
    if summary.n_examples == 0 {
        return Err(CliError::empty("no valid examples"));
    }
    Ok(())
}

fn cmd_report(settings: &Settings, args: &ReportArgs) -> CliResult<()> {
    let records = read_records(&args.traces)?;
    let oracle = load(&args.corpus)?.map(|c| TableOracle::new(c.charts().cloned()));
    write_run_config(settings, "report", args)?;
    let scored = score_records(&records, oracle.as_ref());
    if scored.is_empty() {
        return Err(CliError::empty("no scored records"));
    }
    let report = evaluate_run(&scored, &settings.buckets).map_err(CliError::input)?;
    write_report(settings, &report)
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let settings = Settings::resolve(&cli.shared).map_err(CliError::input)?;
    if let Some(n) = settings.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("worker pool: {e}");
        }
    }
    match &cli.command {
        Command::Datagen(a) => cmd_datagen(&settings, a),
        Command::Run(a) => cmd_run(&settings, a),
        Command::Eval(a) => cmd_eval(&settings, a),
        Command::ExportFt(a) => cmd_export_ft(&settings, a),
        Command::Report(a) => cmd_report(&settings, a),
    }
}

/// Parses `std::env::args`, runs, and returns the process exit code.
pub fn main() -> std::process::ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            return std::process::ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => std::process::ExitCode::from(EXIT_OK),
        Err(e) => {
            eprintln!("error: {:#}", e.error);
            std::process::ExitCode::from(e.code)
        }
    }
}
