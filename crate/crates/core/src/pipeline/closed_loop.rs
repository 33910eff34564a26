//! Question generation, batched episodes and scoring over a table oracle.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controller::{
    run_episode, run_self_consistency, EpisodeConfig, EpisodeError, EpisodeRecord, ReaderBackend,
    ReasonerBackend, SelfConsistencyConfig,
};
use crate::eval::EvalRecord;
use crate::model::{ChartTable, QAInstance, TemplateType};
use crate::oracle::TableOracle;
use crate::symbolic::{gen_questions, SymbolicError};

/// Per-(chart, type) seed, stable regardless of iteration order.
fn question_seed(seed: u64, chart: usize, template: usize) -> u64 {
    seed ^ ((chart as u64) << 8 | template as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GeneratedQuestions {
    pub qa: Vec<QAInstance>,
    /// (chart id, template type) pairs with no valid question.
    pub skipped: Vec<(String, TemplateType)>,
}

/// Template questions of every type in `types` for every chart.
pub fn generate_questions(charts: &[ChartTable], types: &[TemplateType], seed: u64) -> GeneratedQuestions {
    let per_chart: Vec<GeneratedQuestions> = charts
        .par_iter()
        .enumerate()
        .map(|(ci, table)| {
            let mut out = GeneratedQuestions::default();
            for (ti, &t) in types.iter().enumerate() {
                match gen_questions(table, t, question_seed(seed, ci, ti)) {
                    Ok(qs) => out.qa.extend(qs.into_iter().map(|(qa, _)| qa)),
                    Err(SymbolicError::SkippedTemplate { chart, template }) => out.skipped.push((chart, template)),
                    Err(e) => {
                        log::warn!("{}: {t}: {e}", table.id());
                        out.skipped.push((table.id().to_string(), t));
                    }
                }
            }
            out
        })
        .collect();
    per_chart.into_iter().fold(GeneratedQuestions::default(), |mut acc, g| {
        acc.qa.extend(g.qa);
        acc.skipped.extend(g.skipped);
        acc
    })
}

/// Runs every question, in parallel, with self-consistency when `sc` is set.
pub fn run_questions(
    qa: &[QAInstance],
    reasoner: &dyn ReasonerBackend,
    reader: &dyn ReaderBackend,
    config: &EpisodeConfig,
    sc: Option<&SelfConsistencyConfig>,
) -> Result<Vec<EpisodeRecord>, EpisodeError> {
    qa.par_iter()
        .map(|q| {
            let (final_answer, traces) = match sc {
                Some(sc) => {
                    let o = run_self_consistency(&q.question, &q.chart_id, reasoner, reader, config, sc)?;
                    (o.winner, o.traces)
                }
                None => {
                    let t = run_episode(&q.question, &q.chart_id, reasoner, reader, config)?;
                    (t.final_answer.clone(), vec![t])
                }
            };
            Ok(EpisodeRecord {
                chart_id: q.chart_id.clone(),
                question: q.question.clone(),
                template_type: q.template_type,
                gold: Some(q.gold.clone()),
                final_answer,
                traces,
            })
        })
        .collect()
}

/// Scores records that carry a gold answer. Table length comes from the
/// oracle when it knows the chart, else 0.
pub fn score_records(records: &[EpisodeRecord], oracle: Option<&TableOracle>) -> Vec<EvalRecord> {
    records
        .iter()
        .enumerate()
        .filter_map(|(i, r)| {
            let gold = r.gold.clone()?;
            let table_length = oracle
                .and_then(|o| o.chart(&r.chart_id).ok())
                .map_or(0, ChartTable::underlying_length);
            let qa = QAInstance {
                question: r.question.clone(),
                gold,
                template_type: r.template_type,
                chart_id: r.chart_id.clone(),
            };
            Some(EvalRecord::score(qa, r.final_answer.clone(), table_length, format!("traces.jsonl:{}", i + 1)))
        })
        .collect()
}
