//! Corpus ingestion. Malformed entries become warnings; only an unreadable
//! path or a corpus without a single valid chart is fatal.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use thiserror::Error;

use crate::model::{ChartTable, QAInstance, Series, TemplateType, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusFormat {
    /// JSON array or JSONL of chart objects, each with an optional `qa` list.
    InternalJson,
    /// `tables/<id>.csv` plus QA JSON arrays at the directory root.
    ChartqaLike,
    /// One JSON file `{"charts": [...], "qa": [...]}` with per-question template tags.
    PlotqaLike,
}

impl std::str::FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "internal_json" | "internal" | "json" => Ok(CorpusFormat::InternalJson),
            "chartqa_like" | "chartqa" => Ok(CorpusFormat::ChartqaLike),
            "plotqa_like" | "plotqa" => Ok(CorpusFormat::PlotqaLike),
            other => Err(format!(
                "unknown corpus format {other:?} (internal_json, chartqa_like, plotqa_like)"
            )),
        }
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {error}")]
    Io { path: PathBuf, error: std::io::Error },
    #[error("{path}: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("{0}: no valid charts")]
    NoCharts(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusEntry {
    pub chart: ChartTable,
    pub qa: Vec<QAInstance>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Corpus {
    pub entries: Vec<CorpusEntry>,
    /// "file:line: message" for every skipped entry.
    pub warnings: Vec<String>,
}

impl Corpus {
    pub fn charts(&self) -> impl Iterator<Item = &ChartTable> {
        self.entries.iter().map(|e| &e.chart)
    }

    pub fn qa(&self) -> impl Iterator<Item = &QAInstance> {
        self.entries.iter().flat_map(|e| &e.qa)
    }

    fn warn(&mut self, path: &Path, at: impl std::fmt::Display, message: impl std::fmt::Display) {
        let w = format!("{}:{at}: {message}", path.display());
        log::warn!("{w}");
        self.warnings.push(w);
    }

    /// Attaches QA rows to charts by id; unknown ids become warnings.
    fn attach(&mut self, path: &Path, rows: Vec<(String, QAInstance)>) {
        let index: HashMap<String, usize> = self
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.chart.id().to_string(), i))
            .collect();
        for (at, qa) in rows {
            match index.get(&qa.chart_id) {
                Some(&i) => self.entries[i].qa.push(qa),
                None => self.warn(path, at, format!("question refers to unknown chart {:?}", qa.chart_id)),
            }
        }
    }
}

fn read(path: &Path) -> Result<String, LoadError> {
    fs::read_to_string(path).map_err(|error| LoadError::Io {
        path: path.to_path_buf(),
        error,
    })
}

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus, LoadError> {
    let corpus = match format {
        CorpusFormat::InternalJson => load_internal(path)?,
        CorpusFormat::ChartqaLike => load_chartqa(path)?,
        CorpusFormat::PlotqaLike => load_plotqa(path)?,
    };
    if corpus.entries.is_empty() {
        return Err(LoadError::NoCharts(path.to_path_buf()));
    }
    Ok(corpus)
}

/// JSON records with their location: array index or JSONL line.
fn json_records(path: &Path, text: &str) -> Result<Vec<(String, Result<Json, String>)>, LoadError> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        let all: Vec<Json> = serde_json::from_str(text).map_err(|e| LoadError::Malformed {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Ok(all
            .into_iter()
            .enumerate()
            .map(|(i, v)| (format!("entry {i}"), Ok(v)))
            .collect())
    } else {
        Ok(text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                (
                    (i + 1).to_string(),
                    serde_json::from_str(l).map_err(|e| e.to_string()),
                )
            })
            .collect())
    }
}

#[derive(Deserialize)]
struct QaRow {
    #[serde(alias = "query")]
    question: String,
    #[serde(alias = "answer", alias = "label")]
    gold: Value,
    #[serde(default)]
    template_type: Option<String>,
    #[serde(default, alias = "imgname")]
    chart_id: Option<String>,
}

fn qa_from(row: QaRow, chart_id: Option<&str>) -> Result<QAInstance, String> {
    let template_type = row
        .template_type
        .map(|t| t.parse::<TemplateType>())
        .transpose()?;
    let chart_id = match (row.chart_id, chart_id) {
        (Some(id), _) => chart_stem(&id),
        (None, Some(id)) => id.to_string(),
        (None, None) => return Err("question has no chart id".into()),
    };
    Ok(QAInstance {
        question: row.question,
        gold: row.gold,
        template_type,
        chart_id,
    })
}

/// `"chart_12.png"` and `"chart_12"` name the same chart.
fn chart_stem(id: &str) -> String {
    Path::new(id)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| id.to_string())
}

fn load_internal(path: &Path) -> Result<Corpus, LoadError> {
    let text = read(path)?;
    let mut corpus = Corpus::default();
    for (at, record) in json_records(path, &text)? {
        let mut record = match record {
            Ok(r) => r,
            Err(e) => {
                corpus.warn(path, at, e);
                continue;
            }
        };
        let qa_json = record.as_object_mut().and_then(|o| o.remove("qa"));
        let chart: ChartTable = match serde_json::from_value(record) {
            Ok(c) => c,
            Err(e) => {
                corpus.warn(path, &at, e);
                continue;
            }
        };
        let mut qa = Vec::new();
        if let Some(q) = qa_json {
            match serde_json::from_value::<Vec<QaRow>>(q) {
                Ok(rows) => {
                    for (i, row) in rows.into_iter().enumerate() {
                        match qa_from(row, Some(chart.id())) {
                            Ok(x) => qa.push(x),
                            Err(e) => corpus.warn(path, format!("{at} qa {i}"), e),
                        }
                    }
                }
                Err(e) => corpus.warn(path, &at, format!("qa: {e}")),
            }
        }
        corpus.entries.push(CorpusEntry { chart, qa });
    }
    Ok(corpus)
}

fn sorted_files(dir: &Path, ext: &str) -> Result<Vec<PathBuf>, LoadError> {
    let rd = fs::read_dir(dir).map_err(|error| LoadError::Io {
        path: dir.to_path_buf(),
        error,
    })?;
    let mut files: Vec<PathBuf> = rd
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == ext))
        .collect();
    files.sort();
    Ok(files)
}

fn clean_cell(s: &str) -> String {
    s.trim().trim_end_matches('%').trim().to_string()
}

/// First column holds x-axis labels (its header is the x-axis title); the
/// remaining columns are series.
fn table_from_csv(id: &str, path: &Path, corpus: &mut Corpus) -> Option<ChartTable> {
    let mut reader = match csv::ReaderBuilder::new().flexible(false).from_path(path) {
        Ok(r) => r,
        Err(e) => {
            corpus.warn(path, 1, e);
            return None;
        }
    };
    let headers = match reader.headers() {
        Ok(h) => h.clone(),
        Err(e) => {
            corpus.warn(path, 1, e);
            return None;
        }
    };
    if headers.len() < 2 {
        corpus.warn(path, 1, "need a label column and at least one series column");
        return None;
    }
    let series: Vec<Series> = headers.iter().skip(1).map(|h| Series::new(h.trim(), None)).collect();
    let mut labels = Vec::new();
    let mut cells: Vec<Vec<Value>> = vec![Vec::new(); series.len()];
    for (i, record) in reader.records().enumerate() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                corpus.warn(path, i + 2, e);
                return None;
            }
        };
        labels.push(record[0].trim().to_string());
        for (s, cell) in record.iter().skip(1).enumerate() {
            cells[s].push(Value::parse(&clean_cell(cell)));
        }
    }
    let x_title = headers[0].trim();
    let x_title = (!x_title.is_empty() && x_title != "Characteristic").then(|| x_title.to_lowercase());
    match ChartTable::new(id, series, labels, cells) {
        Ok(t) => Some(t.with_titles(x_title, None)),
        Err(e) => {
            corpus.warn(path, 1, e);
            None
        }
    }
}

fn load_chartqa(dir: &Path) -> Result<Corpus, LoadError> {
    let mut corpus = Corpus::default();
    for csv_path in sorted_files(&dir.join("tables"), "csv")? {
        let id = chart_stem(&csv_path.to_string_lossy());
        if let Some(t) = table_from_csv(&id, &csv_path, &mut corpus) {
            corpus.entries.push(CorpusEntry { chart: t, qa: Vec::new() });
        }
    }
    for json_path in sorted_files(dir, "json")? {
        let text = read(&json_path)?;
        let mut rows = Vec::new();
        for (at, record) in json_records(&json_path, &text)? {
            let parsed = record.and_then(|r| serde_json::from_value::<QaRow>(r).map_err(|e| e.to_string()));
            match parsed.and_then(|row| qa_from(row, None)) {
                Ok(qa) => rows.push((at, qa)),
                Err(e) => corpus.warn(&json_path, at, e),
            }
        }
        corpus.attach(&json_path, rows);
    }
    Ok(corpus)
}

#[derive(Deserialize)]
struct PlotqaFile {
    charts: Vec<Json>,
    #[serde(default)]
    qa: Vec<Json>,
}

fn load_plotqa(path: &Path) -> Result<Corpus, LoadError> {
    let text = read(path)?;
    let file: PlotqaFile = serde_json::from_str(&text).map_err(|e| LoadError::Malformed {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut corpus = Corpus::default();
    for (i, c) in file.charts.into_iter().enumerate() {
        match serde_json::from_value::<ChartTable>(c) {
            Ok(chart) => corpus.entries.push(CorpusEntry { chart, qa: Vec::new() }),
            Err(e) => corpus.warn(path, format!("charts {i}"), e),
        }
    }
    let mut rows = Vec::new();
    for (i, q) in file.qa.into_iter().enumerate() {
        let at = format!("qa {i}");
        match serde_json::from_value::<QaRow>(q)
            .map_err(|e| e.to_string())
            .and_then(|row| qa_from(row, None))
        {
            Ok(qa) => rows.push((at, qa)),
            Err(e) => corpus.warn(path, at, e),
        }
    }
    corpus.attach(path, rows);
    Ok(corpus)
}

/// Writes charts in the internal JSONL format, `qa` attached.
pub fn write_internal_jsonl(entries: &[CorpusEntry], out: &mut impl std::io::Write) -> std::io::Result<()> {
    for e in entries {
        let mut v = serde_json::to_value(&e.chart)?;
        if !e.qa.is_empty() {
            v["qa"] = serde_json::to_value(&e.qa)?;
        }
        writeln!(out, "{}", serde_json::to_string(&v)?)?;
    }
    Ok(())
}
