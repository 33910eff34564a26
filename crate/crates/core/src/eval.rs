//! Answer normalization, relaxed accuracy, voting and run reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use once_cell::sync::Lazy;
use regex::Regex;
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{bucket_length, validate_edges, BucketError, QAInstance, TemplateType, Value};

/// Numeric tolerance relative to the gold value, inclusive.
pub const RELATIVE_TOLERANCE: Decimal = Decimal::from_parts(5, 0, 0, false, 2);

static THOUSANDS: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"^[+-]?\d{1,3}(,\d{3})+(\.\d+)?$").unwrap());

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("no answers to vote over")]
    NoAnswer,
    #[error("no records to evaluate")]
    Empty,
    #[error(transparent)]
    Buckets(#[from] BucketError),
}

/// Canonical form of an answer string: quotes, terminal periods, currency
/// and percent signs and thousands separators removed; numbers reduced to
/// their shortest decimal form; yes/no folded; text lowercased.
pub fn normalize_answer(raw: &str) -> Value {
    let mut s = raw.trim();
    loop {
        let before = s;
        s = s.trim_matches(|c| matches!(c, '"' | '\'' | '`')).trim();
        s = s.trim_end_matches('.').trim();
        if s == before {
            break;
        }
    }
    let numeric = s.strip_prefix('$').unwrap_or(s);
    let numeric = numeric.strip_suffix('%').unwrap_or(numeric).trim();
    let numeric = if THOUSANDS.is_match(numeric) {
        numeric.replace(',', "")
    } else {
        numeric.to_string()
    };
    if let Value::Number(n) = Value::parse(&numeric) {
        let d = n.value().normalize();
        return Value::number(if d.is_zero() { Decimal::ZERO } else { d });
    }
    match Value::parse(s) {
        Value::Text(t) => Value::Text(
            t.split_whitespace()
                .collect::<Vec<_>>()
                .join(" ")
                .to_lowercase(),
        ),
        other => other,
    }
}

pub fn normalize_value(v: &Value) -> Value {
    normalize_answer(&v.render())
}

/// Final answers that mean "no answer" ("unknown", empty) are excluded
/// from voting and scored as missing.
pub fn is_no_answer(v: &Value) -> bool {
    matches!(normalize_value(v), Value::Text(t) if t.is_empty() || t == "unknown")
}

/// Exact match for text and yes/no; numeric answers within 5% of gold.
/// A zero gold value requires an exact zero.
pub fn relaxed_match(prediction: &Value, gold: &Value) -> bool {
    match (normalize_value(prediction), normalize_value(gold)) {
        (Value::Number(p), Value::Number(g)) => {
            let (p, g) = (p.value(), g.value());
            if g.is_zero() {
                p.is_zero()
            } else {
                (p - g).abs() <= RELATIVE_TOLERANCE * g.abs()
            }
        }
        (p, g) => p == g,
    }
}

/// Most frequent normalized answer; ties go to the lexicographically
/// smallest rendering.
pub fn majority_vote(finals: &[Value]) -> Result<Value, EvalError> {
    let mut counts: BTreeMap<String, (usize, Value)> = BTreeMap::new();
    for v in finals {
        let n = normalize_value(v);
        counts.entry(n.render()).or_insert((0, n)).0 += 1;
    }
    let mut best: Option<(usize, &Value)> = None;
    for (count, value) in counts.values() {
        if best.map_or(true, |(c, _)| *count > c) {
            best = Some((*count, value));
        }
    }
    best.map(|(_, v)| v.clone()).ok_or(EvalError::NoAnswer)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub qa: QAInstance,
    pub prediction: Option<Value>,
    pub correct: bool,
    pub table_length: usize,
    pub trace_ref: String,
}

impl EvalRecord {
    pub fn score(
        qa: QAInstance,
        prediction: Option<Value>,
        table_length: usize,
        trace_ref: impl Into<String>,
    ) -> Self {
        let prediction = prediction.filter(|p| !is_no_answer(p));
        let correct = prediction
            .as_ref()
            .is_some_and(|p| relaxed_match(p, &qa.gold));
        Self {
            qa,
            prediction,
            correct,
            table_length,
            trace_ref: trace_ref.into(),
        }
    }
}

/// Count-only accumulator. Merging is associative and commutative, so
/// partial tallies from concurrent workers combine in any order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EvalTally {
    n: usize,
    correct: usize,
    by_template: BTreeMap<TemplateType, (usize, usize)>,
    by_length: BTreeMap<usize, (usize, usize)>,
}

impl EvalTally {
    pub fn add(&mut self, record: &EvalRecord) {
        let hit = usize::from(record.correct);
        self.n += 1;
        self.correct += hit;
        if let Some(t) = record.qa.template_type {
            let e = self.by_template.entry(t).or_default();
            e.0 += 1;
            e.1 += hit;
        }
        let e = self.by_length.entry(record.table_length).or_default();
        e.0 += 1;
        e.1 += hit;
    }

    pub fn merge(mut self, other: EvalTally) -> EvalTally {
        self.n += other.n;
        self.correct += other.correct;
        for (k, (c, h)) in other.by_template {
            let e = self.by_template.entry(k).or_default();
            e.0 += c;
            e.1 += h;
        }
        for (k, (c, h)) in other.by_length {
            let e = self.by_length.entry(k).or_default();
            e.0 += c;
            e.1 += h;
        }
        self
    }

    pub fn finish(&self, bucket_edges: &[usize]) -> Result<EvalReport, EvalError> {
        validate_edges(bucket_edges)?;
        if self.n == 0 {
            return Err(EvalError::Empty);
        }
        let n = self.n as f64;
        let by_template = self
            .by_template
            .iter()
            .map(|(&t, &(count, correct))| {
                (
                    t,
                    TemplateStats {
                        count,
                        errors: count - correct,
                        accuracy: correct as f64 / count as f64,
                    },
                )
            })
            .collect();
        let mut buckets = vec![(0usize, 0usize); bucket_edges.len()];
        for (&length, &(count, correct)) in &self.by_length {
            let b = bucket_length(length, bucket_edges)?;
            buckets[b].0 += count;
            buckets[b].1 += correct;
        }
        let by_length_bucket = buckets
            .into_iter()
            .enumerate()
            .map(|(i, (count, correct))| BucketStats {
                bucket: i,
                lower: bucket_edges[i],
                upper: bucket_edges.get(i + 1).copied(),
                count,
                ratio_of_questions: count as f64 / n,
                accuracy: (count > 0).then(|| correct as f64 / count as f64),
            })
            .collect();
        Ok(EvalReport {
            n: self.n,
            correct: self.correct,
            overall_accuracy: self.correct as f64 / n,
            by_template,
            by_length_bucket,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemplateStats {
    pub count: usize,
    pub errors: usize,
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BucketStats {
    pub bucket: usize,
    pub lower: usize,
    /// Exclusive upper edge; absent for the open-ended last bucket.
    pub upper: Option<usize>,
    pub count: usize,
    pub ratio_of_questions: f64,
    pub accuracy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub correct: usize,
    pub overall_accuracy: f64,
    pub by_template: BTreeMap<TemplateType, TemplateStats>,
    pub by_length_bucket: Vec<BucketStats>,
}

pub fn evaluate_run(records: &[EvalRecord], bucket_edges: &[usize]) -> Result<EvalReport, EvalError> {
    let mut tally = EvalTally::default();
    for r in records {
        tally.add(r);
    }
    tally.finish(bucket_edges)
}

impl EvalReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "overall: {}/{} correct, accuracy {:.4}",
            self.correct, self.n, self.overall_accuracy
        );
        if !self.by_template.is_empty() {
            let _ = writeln!(out, "\n{:<16}{:>8}{:>8}{:>10}", "template", "count", "errors", "accuracy");
            for (t, s) in &self.by_template {
                let _ = writeln!(
                    out,
                    "{:<16}{:>8}{:>8}{:>10.4}",
                    t.as_str(),
                    s.count,
                    s.errors,
                    s.accuracy
                );
            }
        }
        let _ = writeln!(out, "\n{:<16}{:>8}{:>8}{:>10}", "table length", "ratio", "count", "accuracy");
        for b in &self.by_length_bucket {
            let range = match b.upper {
                Some(u) => format!("[{}, {})", b.lower, u),
                None => format!("[{}, inf)", b.lower),
            };
            let acc = b.accuracy.map_or_else(|| "-".to_string(), |a| format!("{a:.4}"));
            let _ = writeln!(
                out,
                "{:<16}{:>8.4}{:>8}{:>10}",
                range, b.ratio_of_questions, b.count, acc
            );
        }
        out
    }
}

/// Per-record verdicts as CSV.
pub fn records_to_csv(records: &[EvalRecord]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "chart_id",
        "question",
        "gold",
        "prediction",
        "correct",
        "template_type",
        "table_length",
        "trace_ref",
    ])?;
    for r in records {
        w.write_record([
            r.qa.chart_id.as_str(),
            r.qa.question.as_str(),
            &r.qa.gold.render(),
            &r.prediction.as_ref().map(Value::render).unwrap_or_default(),
            if r.correct { "true" } else { "false" },
            r.qa.template_type.map_or("", TemplateType::as_str),
            &r.table_length.to_string(),
            r.trace_ref.as_str(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
}
