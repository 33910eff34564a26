//! Reasoner fine-tuning examples with segment-level loss masks. Masked text
//! (question, reader answers) is context only; unmasked text (queries and
//! the conclusion) is what the reasoner learns to write.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::EpisodeRecord;
use crate::eval::relaxed_match;
use crate::model::{ReasoningTrace, StepRole, Termination};
use crate::protocol::{parse_reader_answer, parse_step, ReaderAnswer, StepKind};

const INST_OPEN: &str = "[INST] ";
const INST_CLOSE: &str = " [/INST]";
pub const EXAMPLE_SEPARATOR: &str = "---";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub text: String,
    pub masked: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct System2Example {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chart_id: Option<String>,
    pub segments: Vec<Segment>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExampleError {
    #[error("episode did not end with a conclusion ({0:?})")]
    NoConclusion(Termination),
    #[error("trace contains off-protocol line {0:?}")]
    OffProtocol(String),
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error("final answer does not match gold")]
    Incorrect,
    #[error("annotation: {0}")]
    Annotation(String),
}

impl System2Example {
    /// The plain training string.
    pub fn text(&self) -> String {
        self.segments.iter().map(|s| s.text.as_str()).collect()
    }

    /// Masked segments wrapped in [INST] tags, one paragraph per segment.
    pub fn render_tagged(&self) -> String {
        self.segments
            .iter()
            .map(|s| {
                let body = s.text.trim_end_matches('\n');
                if s.masked {
                    format!("{INST_OPEN}{body}{INST_CLOSE}")
                } else {
                    body.to_string()
                }
            })
            .collect::<Vec<_>>()
            .join("\n\n")
    }

    pub fn masked_chars(&self) -> usize {
        self.segments.iter().filter(|s| s.masked).map(|s| s.text.chars().count()).sum()
    }

    pub fn unmasked_chars(&self) -> usize {
        self.segments.iter().filter(|s| !s.masked).map(|s| s.text.chars().count()).sum()
    }

    pub fn from_trace(question: &str, chart_id: Option<&str>, trace: &ReasoningTrace) -> Result<Self, ExampleError> {
        if trace.terminated_by != Termination::Conclusion {
            return Err(ExampleError::NoConclusion(trace.terminated_by));
        }
        trace
            .validate()
            .map_err(|e| ExampleError::InvalidTrace(e.to_string()))?;
        let mut segments = vec![Segment {
            text: format!("Q: {}\n", question.trim()),
            masked: true,
        }];
        let n = trace.steps.len();
        for (i, step) in trace.steps.iter().enumerate() {
            let prefix = if i == 0 { "A: " } else { "" };
            let newline = if i + 1 == n { "" } else { "\n" };
            let masked = match step.role {
                StepRole::ProtocolError => return Err(ExampleError::OffProtocol(step.text.clone())),
                StepRole::ReaderAnswer => true,
                StepRole::ReasonerQuery | StepRole::Conclusion => false,
            };
            segments.push(Segment {
                text: format!("{prefix}{}{newline}", step.text),
                masked,
            });
        }
        Ok(System2Example {
            chart_id: chart_id.map(str::to_string),
            segments,
        })
    }
}

/// Parses one annotated example: blank-line separated paragraphs, masked
/// ones wrapped in [INST] tags. Expected shape: question, then "A: " on the
/// first query, query/answer pairs, and a final conclusion.
pub fn parse_annotated(block: &str) -> Result<System2Example, ExampleError> {
    let bad = |m: String| ExampleError::Annotation(m);
    let paras: Vec<&str> = block
        .trim()
        .split("\n\n")
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .collect();
    let mut segments = Vec::with_capacity(paras.len());
    for (i, p) in paras.iter().enumerate() {
        let (body, masked) = match p.strip_prefix(INST_OPEN).and_then(|r| r.strip_suffix(INST_CLOSE)) {
            Some(inner) => (inner, true),
            None => (*p, false),
        };
        let newline = if i + 1 == paras.len() { "" } else { "\n" };
        segments.push(Segment {
            text: format!("{body}{newline}"),
            masked,
        });
    }
    let ex = System2Example {
        chart_id: None,
        segments,
    };
    let segs = &ex.segments;
    match segs.first() {
        Some(s) if s.masked && s.text.starts_with("Q: ") => {}
        _ => return Err(bad("must open with a masked \"Q: \" paragraph".into())),
    }
    let first_step = match segs.get(1) {
        Some(s) if !s.masked && s.text.starts_with("A: ") => &s.text["A: ".len()..],
        _ => return Err(bad("second paragraph must be the unmasked \"A: \" step".into())),
    };
    let last = segs.len() - 1;
    for (i, s) in segs.iter().enumerate().skip(1) {
        let line = if i == 1 { first_step } else { s.text.as_str() };
        let line = line.trim_end();
        let kind_ok = match (s.masked, i == last) {
            (false, true) => matches!(parse_step(line), StepKind::Conclusion { .. }),
            (false, false) => matches!(parse_step(line), StepKind::Query(_)),
            (true, _) => !segs[i - 1].masked && !matches!(parse_reader_answer(line), ReaderAnswer::Unavailable(_)) || line == crate::protocol::NOT_AVAILABLE,
        };
        if !kind_ok {
            return Err(bad(format!("paragraph {} is out of place: {line:?}", i + 1)));
        }
    }
    Ok(ex)
}

/// Splits an annotation file on `---` lines.
pub fn parse_annotated_file(text: &str) -> Vec<Result<System2Example, ExampleError>> {
    let mut blocks = vec![String::new()];
    for line in text.lines() {
        if line.trim() == EXAMPLE_SEPARATOR {
            blocks.push(String::new());
        } else {
            let b = blocks.last_mut().expect("non-empty");
            b.push_str(line);
            b.push('\n');
        }
    }
    blocks
        .iter()
        .filter(|b| !b.trim().is_empty())
        .map(|b| parse_annotated(b))
        .collect()
}

/// Examples from run records. With `correct_only`, traces whose final
/// answer misses a known gold are dropped.
pub fn examples_from_records(
    records: &[EpisodeRecord],
    correct_only: bool,
) -> Vec<Result<System2Example, ExampleError>> {
    let mut out = Vec::new();
    for r in records {
        for t in &r.traces {
            let ex = System2Example::from_trace(&r.question, Some(&r.chart_id), t).and_then(|ex| {
                match (&r.gold, &t.final_answer) {
                    (Some(g), Some(f)) if correct_only && !relaxed_match(f, g) => Err(ExampleError::Incorrect),
                    _ => Ok(ex),
                }
            });
            out.push(ex);
        }
    }
    out
}

#[derive(Serialize)]
struct System2Record<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    chart_id: Option<&'a str>,
    segments: &'a [Segment],
    #[serde(skip_serializing_if = "Option::is_none")]
    rendered: Option<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ExportSummary {
    pub n_examples: usize,
    pub n_skipped: usize,
    pub masked_chars: usize,
    pub unmasked_chars: usize,
}

/// Writes one JSON line per valid example; invalid ones are logged and
/// counted as skipped.
pub fn export_system2_sft(
    examples: &[Result<System2Example, ExampleError>],
    format_tagged: bool,
    out: &mut impl Write,
) -> std::io::Result<ExportSummary> {
    let mut summary = ExportSummary::default();
    for (i, ex) in examples.iter().enumerate() {
        let ex = match ex {
            Ok(ex) => ex,
            Err(e) => {
                log::warn!("example {i} skipped: {e}");
                summary.n_skipped += 1;
                continue;
            }
        };
        let rec = System2Record {
            chart_id: ex.chart_id.as_deref(),
            segments: &ex.segments,
            rendered: format_tagged.then(|| ex.render_tagged()),
        };
        writeln!(out, "{}", serde_json::to_string(&rec)?)?;
        summary.n_examples += 1;
        summary.masked_chars += ex.masked_chars();
        summary.unmasked_chars += ex.unmasked_chars();
    }
    Ok(summary)
}
