//! Reader training pairs: every atomic query a chart supports, answered by
//! the table oracle.

use std::io::Write;
use std::ops::Add;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::ChartTable;
use crate::oracle;
use crate::protocol::{format_query, AtomicQuery};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct System1Pair {
    pub chart_id: String,
    pub op: AtomicQuery,
    pub query: String,
    pub answer: String,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub n_charts: usize,
    pub n_describe: usize,
    pub n_point: usize,
    pub n_group: usize,
    pub seed: u64,
}

impl CorpusManifest {
    pub fn total(&self) -> usize {
        self.n_describe + self.n_point + self.n_group
    }
}

impl Add for CorpusManifest {
    type Output = CorpusManifest;

    fn add(self, o: CorpusManifest) -> CorpusManifest {
        CorpusManifest {
            n_charts: self.n_charts + o.n_charts,
            n_describe: self.n_describe + o.n_describe,
            n_point: self.n_point + o.n_point,
            n_group: self.n_group + o.n_group,
            seed: self.seed,
        }
    }
}

/// Describe, one point query per cell, and group queries along both axes
/// (multi-series) or for the lone series.
pub fn chart_queries(table: &ChartTable) -> Vec<AtomicQuery> {
    let mut out = vec![AtomicQuery::Describe];
    let single = table.is_single_series();
    for s in table.series() {
        for label in table.x_labels() {
            out.push(if single {
                AtomicQuery::ExtractPoint {
                    entity: label.clone(),
                    by: None,
                }
            } else {
                AtomicQuery::point(s.name.clone(), label.clone())
            });
        }
    }
    for s in table.series() {
        out.push(AtomicQuery::group(s.name.clone()));
    }
    if !single {
        for label in table.x_labels() {
            out.push(AtomicQuery::group(label.clone()));
        }
    }
    out
}

fn chart_pairs(table: &ChartTable) -> (Vec<System1Pair>, CorpusManifest) {
    let mut m = CorpusManifest {
        n_charts: 1,
        ..CorpusManifest::default()
    };
    let pairs = chart_queries(table)
        .into_iter()
        .map(|op| {
            match op {
                AtomicQuery::Describe => m.n_describe += 1,
                AtomicQuery::ExtractPoint { .. } => m.n_point += 1,
                AtomicQuery::ExtractGroup { .. } => m.n_group += 1,
            }
            System1Pair {
                chart_id: table.id().to_string(),
                query: format_query(&op),
                answer: oracle::answer(table, &op),
                op,
            }
        })
        .collect();
    (pairs, m)
}

/// All pairs for `charts`, shuffled under `seed`.
pub fn generate_system1_corpus(charts: &[ChartTable], seed: u64) -> (Vec<System1Pair>, CorpusManifest) {
    let per_chart: Vec<_> = charts.par_iter().map(chart_pairs).collect();
    let mut manifest = CorpusManifest {
        seed,
        ..CorpusManifest::default()
    };
    let mut pairs = Vec::new();
    for (p, m) in per_chart {
        manifest = manifest + m;
        pairs.extend(p);
    }
    pairs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    (pairs, manifest)
}

#[derive(Serialize)]
struct System1Record<'a> {
    chart_id: &'a str,
    op: &'a AtomicQuery,
    query: &'a str,
    answer: &'a str,
    /// Only the answer receives loss.
    loss_span: &'static str,
}

pub fn export_system1_sft(pairs: &[System1Pair], out: &mut impl Write) -> std::io::Result<()> {
    for p in pairs {
        let rec = System1Record {
            chart_id: &p.chart_id,
            op: &p.op,
            query: &p.query,
            answer: &p.answer,
            loss_span: "answer",
        };
        writeln!(out, "{}", serde_json::to_string(&rec)?)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Series, Value};

    fn table(n_series: usize, n_labels: usize) -> ChartTable {
        ChartTable::new(
            "c",
            (0..n_series).map(|i| Series::new(format!("S{i}"), None)).collect(),
            (0..n_labels).map(|i| format!("L{i}")).collect(),
            (0..n_series)
                .map(|s| (0..n_labels).map(|l| Value::parse(&format!("{}", s * 10 + l))).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn count_formula_by_enumeration() {
        let (pairs, m) = generate_system1_corpus(&[table(2, 3)], 1);
        assert_eq!(pairs.len(), 12);
        assert_eq!((m.n_describe, m.n_point, m.n_group), (1, 6, 5));
        let (pairs, m) = generate_system1_corpus(&[table(1, 4)], 1);
        assert_eq!(pairs.len(), 6);
        assert_eq!((m.n_describe, m.n_point, m.n_group), (1, 4, 1));
    }

    #[test]
    fn single_series_points_use_entity_form() {
        let (pairs, _) = generate_system1_corpus(&[table(1, 2)], 0);
        let p = pairs.iter().find(|p| p.query == "Let's extract the data of L1.").unwrap();
        assert_eq!(p.answer, "The data is 1.");
    }

    #[test]
    fn empty_export_is_empty() {
        let mut buf = Vec::new();
        export_system1_sft(&[], &mut buf).unwrap();
        assert!(buf.is_empty());
    }
}
