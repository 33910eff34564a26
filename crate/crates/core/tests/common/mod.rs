#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use chartloop::controller::{
    run_episode, EpisodeConfig, OracleReader, PromptTemplate, ScriptedReasoner,
};
use chartloop::model::{ChartTable, ReasoningTrace};
use chartloop::oracle::TableOracle;
use chartloop::pipeline::{load_corpus, CorpusFormat};
use chartloop::protocol::{format_query, format_reader_answer, parse_reader_answer, parse_step, StepKind};

pub fn asset(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("assets").join(rel)
}

pub fn read_asset(rel: &str) -> String {
    std::fs::read_to_string(asset(rel)).unwrap()
}

pub fn charts(rel: &str) -> Vec<ChartTable> {
    load_corpus(&asset(rel), CorpusFormat::InternalJson)
        .unwrap()
        .charts()
        .cloned()
        .collect()
}

pub fn chart(rel: &str, id: &str) -> ChartTable {
    charts(rel).into_iter().find(|c| c.id() == id).unwrap()
}

/// Replays `script` against the oracle over the replay charts.
pub fn replay(chart_id: &str, question: &str, script: &str) -> ReasoningTrace {
    let oracle = Arc::new(TableOracle::new(charts("fixtures/replay_charts.jsonl")));
    let reasoner = ScriptedReasoner::from_path(&asset(script)).unwrap();
    run_episode(
        question,
        chart_id,
        &reasoner,
        &OracleReader::new(oracle),
        &EpisodeConfig::default(),
    )
    .unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineRole {
    Reasoner,
    Reader,
}

/// Reasoner lines alternate with reader answers after each query.
pub fn exchange_roles(lines: &[String]) -> Vec<(LineRole, String)> {
    let mut out = Vec::new();
    let mut expect_answer = false;
    for l in lines {
        if expect_answer {
            out.push((LineRole::Reader, l.clone()));
            expect_answer = false;
        } else {
            expect_answer = matches!(parse_step(l), StepKind::Query(_));
            out.push((LineRole::Reasoner, l.clone()));
        }
    }
    out
}

/// parse -> format -> parse with byte equality. Err names the failing line.
pub fn round_trip(role: LineRole, line: &str) -> Result<(), String> {
    match role {
        LineRole::Reasoner => match parse_step(line) {
            StepKind::Query(q) => {
                let formatted = format_query(&q);
                if formatted != line {
                    return Err(format!("query re-formats as {formatted:?}: {line:?}"));
                }
                match parse_step(&formatted) {
                    StepKind::Query(q2) if q2 == q => Ok(()),
                    other => Err(format!("query re-parses as {other:?}: {line:?}")),
                }
            }
            StepKind::Conclusion { answer, text } => {
                if text != line {
                    return Err(format!("conclusion text changed: {line:?}"));
                }
                match parse_step(&text) {
                    StepKind::Conclusion { answer: a2, .. } if a2 == answer => Ok(()),
                    other => Err(format!("conclusion re-parses as {other:?}")),
                }
            }
            StepKind::Other(_) => Err(format!("classified as Other: {line:?}")),
        },
        LineRole::Reader => {
            let parsed = parse_reader_answer(line);
            let formatted = format_reader_answer(&parsed).map_err(|e| format!("{e}: {line:?}"))?;
            if formatted != line {
                return Err(format!("reader answer re-formats as {formatted:?}"));
            }
            if parse_reader_answer(&formatted) != parsed {
                return Err(format!("reader answer re-parses differently: {line:?}"));
            }
            Ok(())
        }
    }
}

/// Every protocol line of the shipped reasoner prompt.
pub fn prompt_lines() -> Vec<(LineRole, String)> {
    let t = PromptTemplate::parse(&read_asset("prompts/domino_5shot.txt"));
    t.exemplars().flat_map(|e| exchange_roles(&e.answer_lines)).collect()
}

/// Protocol lines of the annotated examples, with [INST] tags and the
/// leading "A: " removed by plain string slicing.
pub fn annotated_lines() -> Vec<Vec<(LineRole, String)>> {
    read_asset("annotated/system2_examples.txt")
        .split("\n---\n")
        .map(|block| {
            block
                .split("\n\n")
                .map(str::trim)
                .filter(|p| !p.is_empty() && !p.starts_with("[INST] Q: "))
                .map(|p| match p.strip_prefix("[INST] ").and_then(|r| r.strip_suffix(" [/INST]")) {
                    Some(inner) => (LineRole::Reader, inner.to_string()),
                    None => (LineRole::Reasoner, p.trim_start_matches("A: ").to_string()),
                })
                .collect()
        })
        .collect()
}
