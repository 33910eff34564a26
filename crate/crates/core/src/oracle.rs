//! Deterministic reader over ground-truth tables.
//!
//! Answers atomic queries with the exact sentences a perfect visual reader
//! would produce. Entities are matched case-insensitively; near misses are
//! accepted above a normalized edit similarity of [`MATCH_THRESHOLD`].

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::model::{normalize_name, ChartTable, Value};
use crate::protocol::{
    format_description, format_reader_answer, parse_step, AtomicQuery, ReaderAnswer, StepKind,
    NOT_AVAILABLE,
};

pub const MATCH_THRESHOLD: f64 = 0.8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Series,
    XLabel,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntityResolution {
    pub axis: Axis,
    pub index: usize,
    pub matched_name: String,
    pub score: f64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("no series or x-axis label matches {0:?}")]
    NotFound(String),
}

pub fn describe(table: &ChartTable) -> String {
    format_description(table.series(), table.x_labels())
}

fn names_on(table: &ChartTable, axis: Axis) -> Vec<&str> {
    match axis {
        Axis::Series => table.series().iter().map(|s| s.name.as_str()).collect(),
        Axis::XLabel => table.x_labels().iter().map(String::as_str).collect(),
    }
}

/// Best match for `name` on the given axes, searched in order. Exact
/// normalized matches win outright; otherwise the highest similarity at or
/// above the threshold, earlier axis and lower index winning ties.
fn resolve_on(table: &ChartTable, name: &str, axes: &[Axis]) -> Result<EntityResolution, OracleError> {
    let key = normalize_name(name);
    for &axis in axes {
        if let Some(index) = names_on(table, axis)
            .iter()
            .position(|n| normalize_name(n) == key)
        {
            return Ok(EntityResolution {
                axis,
                index,
                matched_name: names_on(table, axis)[index].to_string(),
                score: 1.0,
            });
        }
    }
    let mut best: Option<EntityResolution> = None;
    for &axis in axes {
        for (index, candidate) in names_on(table, axis).into_iter().enumerate() {
            let score = strsim::normalized_levenshtein(&key, &normalize_name(candidate));
            if best.as_ref().map_or(true, |b| score > b.score) {
                best = Some(EntityResolution {
                    axis,
                    index,
                    matched_name: candidate.to_string(),
                    score,
                });
            }
        }
    }
    best.filter(|b| b.score >= MATCH_THRESHOLD)
        .ok_or_else(|| OracleError::NotFound(name.to_string()))
}

pub fn resolve_entity(table: &ChartTable, name: &str) -> Result<EntityResolution, OracleError> {
    resolve_on(table, name, &[Axis::Series, Axis::XLabel])
}

fn scalar(v: &Value) -> String {
    format_reader_answer(&ReaderAnswer::Scalar(v.clone())).expect("scalar answers always format")
}

fn cell_for(table: &ChartTable, a: &EntityResolution, b: &EntityResolution) -> Option<Value> {
    match (a.axis, b.axis) {
        (Axis::Series, Axis::XLabel) => Some(table.cell(a.index, b.index).clone()),
        (Axis::XLabel, Axis::Series) => Some(table.cell(b.index, a.index).clone()),
        _ => None,
    }
}

fn point_value(table: &ChartTable, entity: &str, by: Option<&str>) -> Option<Value> {
    match by {
        Some(by) => {
            // Either entity may name the series; take whichever pairing
            // resolves with the higher combined score, series-first on ties.
            let forward = resolve_on(table, entity, &[Axis::Series])
                .and_then(|s| Ok((s, resolve_on(table, by, &[Axis::XLabel])?)));
            let swapped = resolve_on(table, by, &[Axis::Series])
                .and_then(|s| Ok((s, resolve_on(table, entity, &[Axis::XLabel])?)));
            let (s, x) = match (forward, swapped) {
                (Ok(f), Ok(w)) if w.0.score + w.1.score > f.0.score + f.1.score => w,
                (Ok(f), _) => f,
                (Err(_), Ok(w)) => w,
                (Err(_), Err(_)) => return None,
            };
            cell_for(table, &s, &x)
        }
        None => {
            let r = resolve_entity(table, entity).ok()?;
            match r.axis {
                Axis::XLabel if table.is_single_series() => Some(table.cell(0, r.index).clone()),
                Axis::Series if table.x_labels().len() == 1 => Some(table.cell(r.index, 0).clone()),
                _ => None,
            }
        }
    }
}

/// `The data is X.` for the addressed cell, or the not-available sentence.
pub fn extract_point(table: &ChartTable, entity: &str, by: Option<&str>) -> String {
    point_value(table, entity, by)
        .map(|v| scalar(&v))
        .unwrap_or_else(|| NOT_AVAILABLE.to_string())
}

fn group_pairs(table: &ChartTable, entity: Option<&str>) -> Option<Vec<(String, Value)>> {
    let (axis, index) = match entity {
        None if table.is_single_series() => (Axis::Series, 0),
        None => return None,
        Some(name) => {
            let r = resolve_entity(table, name).ok()?;
            (r.axis, r.index)
        }
    };
    Some(match axis {
        Axis::Series => table
            .x_labels()
            .iter()
            .zip(&table.cells()[index])
            .map(|(label, v)| (label.clone(), v.clone()))
            .collect(),
        Axis::XLabel => table
            .series()
            .iter()
            .zip(table.cells())
            .map(|(s, row)| (s.name.clone(), row[index].clone()))
            .collect(),
    })
}

/// A series entity lists its values over the x-axis; an x-label entity lists
/// every series at that label.
pub fn extract_group(table: &ChartTable, entity: Option<&str>) -> String {
    group_pairs(table, entity)
        .and_then(|pairs| format_reader_answer(&ReaderAnswer::Group(pairs)).ok())
        .unwrap_or_else(|| NOT_AVAILABLE.to_string())
}

/// Answers one query line. Lines outside the query vocabulary get the
/// not-available sentence.
pub fn answer_query(table: &ChartTable, query_line: &str) -> String {
    match parse_step(query_line) {
        StepKind::Query(q) => answer(table, &q),
        _ => NOT_AVAILABLE.to_string(),
    }
}

pub fn answer(table: &ChartTable, query: &AtomicQuery) -> String {
    match query {
        AtomicQuery::Describe => describe(table),
        AtomicQuery::ExtractPoint { entity, by } => extract_point(table, entity, by.as_deref()),
        AtomicQuery::ExtractGroup { entity: None } => extract_group(table, None),
        AtomicQuery::ExtractGroup {
            entity: Some(entity),
        } => {
            // "Let's extract the data of 2015." on a single-series chart asks
            // for one bar, not a one-element group.
            let on_label = resolve_entity(table, entity)
                .map(|r| r.axis == Axis::XLabel)
                .unwrap_or(false);
            if on_label && table.is_single_series() {
                extract_point(table, entity, None)
            } else {
                extract_group(table, Some(entity))
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum ChartLookupError {
    #[error("unknown chart {0:?}")]
    UnknownChart(String),
}

/// Chart store keyed by chart id, shared read-only across episodes.
#[derive(Clone, Debug, Default)]
pub struct TableOracle {
    charts: HashMap<String, Arc<ChartTable>>,
}

impl TableOracle {
    pub fn new(tables: impl IntoIterator<Item = ChartTable>) -> Self {
        Self {
            charts: tables
                .into_iter()
                .map(|t| (t.id().to_string(), Arc::new(t)))
                .collect(),
        }
    }

    pub fn insert(&mut self, table: ChartTable) {
        self.charts.insert(table.id().to_string(), Arc::new(table));
    }

    pub fn chart(&self, chart_ref: &str) -> Result<&ChartTable, ChartLookupError> {
        self.charts
            .get(chart_ref)
            .map(Arc::as_ref)
            .ok_or_else(|| ChartLookupError::UnknownChart(chart_ref.to_string()))
    }

    pub fn len(&self) -> usize {
        self.charts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.charts.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Series;
    use crate::protocol::parse_reader_answer;
    use proptest::prelude::*;

    fn oman() -> ChartTable {
        let rows = [
            ["183.88", "233.80", "210.69", "195.26", "196.32", "154.21", "153.22"],
            ["40.72", "40.04", "39.21", "40.63", "41.47", "41.76", "42.77"],
        ];
        ChartTable::new(
            "oman",
            vec![Series::new("Oman", Some("brown")), Series::new("Samoa", Some("dark blue"))],
            (2008..=2014).map(|y| y.to_string()).collect(),
            rows.iter().map(|r| r.iter().map(|v| Value::parse(v)).collect()).collect(),
        )
        .unwrap()
    }

    fn single(labels: &[&str], values: &[&str]) -> ChartTable {
        ChartTable::new(
            "single",
            vec![Series::new("Value", None)],
            labels.iter().map(|s| s.to_string()).collect(),
            vec![values.iter().map(|v| Value::parse(v)).collect()],
        )
        .unwrap()
    }

    #[test]
    fn resolves_entities() {
        let t = oman();
        let r = resolve_entity(&t, "oman").unwrap();
        assert_eq!((r.axis, r.index, r.score), (Axis::Series, 0, 1.0));
        let r = resolve_entity(&t, "  2010 ").unwrap();
        assert_eq!((r.axis, r.index), (Axis::XLabel, 2));
        let r = resolve_entity(&t, "Omaan").unwrap();
        assert_eq!(r.matched_name, "Oman");
        assert!(r.score >= MATCH_THRESHOLD && r.score < 1.0);
        assert_eq!(
            resolve_entity(&t, "Atlantis"),
            Err(OracleError::NotFound("Atlantis".into()))
        );
    }

    #[test]
    fn point_answers() {
        let t = oman();
        assert_eq!(extract_point(&t, "Oman", Some("2010")), "The data is 210.69.");
        assert_eq!(extract_point(&t, "2010", Some("Oman")), "The data is 210.69.");
        assert_eq!(extract_point(&t, "Oman", Some("1999")), NOT_AVAILABLE);
        assert_eq!(extract_point(&t, "Oman", None), NOT_AVAILABLE);
        let s = single(&["2014", "2015"], &["280.5", "296.0"]);
        assert_eq!(extract_point(&s, "2015", None), "The data is 296.0.");
        assert_eq!(answer_query(&s, "Let's extract the data of 2015."), "The data is 296.0.");
    }

    #[test]
    fn group_answers() {
        let t = oman();
        assert_eq!(
            extract_group(&t, Some("2009")),
            "The data is 233.80 in Oman, 40.04 in Samoa."
        );
        assert_eq!(extract_group(&t, None), NOT_AVAILABLE);
        assert_eq!(extract_group(&t, Some("Atlantis")), NOT_AVAILABLE);
        let s = single(&["Decreased", "No impact", "Increased"], &["81.00", "16.00", "3.00"]);
        assert_eq!(
            answer_query(&s, "Let's extract all the values."),
            "The data is 81.00 in Decreased, 16.00 in No impact, 3.00 in Increased."
        );
        assert_eq!(
            answer_query(&s, "Let's extract the data of Value."),
            "The data is 81.00 in Decreased, 16.00 in No impact, 3.00 in Increased."
        );
        assert_eq!(answer_query(&s, "Let's find the row of Turkey."), NOT_AVAILABLE);
    }

    #[test]
    fn describes() {
        assert_eq!(
            describe(&oman()),
            "The figure shows the data of: Oman (brown) | Samoa (dark blue). The x-axis shows: 2008 | 2009 | 2010 | 2011 | 2012 | 2013 | 2014."
        );
    }

    fn random_table() -> impl Strategy<Value = ChartTable> {
        (1usize..5, 1usize..8).prop_flat_map(|(rows, cols)| {
            proptest::collection::vec(
                proptest::collection::vec((0i64..100_000, 0u32..3), cols),
                rows,
            )
            .prop_map(move |cells| {
                ChartTable::new(
                    "r",
                    (0..rows).map(|i| Series::new(format!("Series {i}"), None)).collect(),
                    (0..cols).map(|i| format!("{}", 1990 + i)).collect(),
                    cells
                        .into_iter()
                        .map(|r| r.into_iter().map(|(m, s)| Value::number(rust_decimal::Decimal::new(m, s))).collect())
                        .collect(),
                )
                .unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn point_matches_cell(t in random_table()) {
            for (s, series) in t.series().iter().enumerate() {
                for (x, label) in t.x_labels().iter().enumerate() {
                    let ans = parse_reader_answer(&extract_point(&t, &series.name, Some(label)));
                    prop_assert_eq!(ans, ReaderAnswer::Scalar(t.cell(s, x).clone()));
                }
            }
        }

        #[test]
        fn group_matches_points(t in random_table()) {
            for series in t.series() {
                let ReaderAnswer::Group(pairs) = parse_reader_answer(&extract_group(&t, Some(&series.name))) else {
                    return Err(TestCaseError::fail("expected group"));
                };
                let points: Vec<(String, Value)> = t.x_labels().iter().map(|x| {
                    let ReaderAnswer::Scalar(v) = parse_reader_answer(&extract_point(&t, &series.name, Some(x))) else { panic!() };
                    (x.clone(), v)
                }).collect();
                prop_assert_eq!(pairs, points);
            }
        }

        #[test]
        fn description_reparses(t in random_table()) {
            match parse_reader_answer(&describe(&t)) {
                ReaderAnswer::Description { series, x_labels } => {
                    prop_assert_eq!(series, t.series().to_vec());
                    prop_assert_eq!(x_labels, t.x_labels().to_vec());
                }
                other => return Err(TestCaseError::fail(format!("{other:?}"))),
            }
        }

        #[test]
        fn deterministic(t in random_table(), q in "\\PC{0,30}") {
            prop_assert_eq!(answer_query(&t, &q), answer_query(&t, &q));
        }
    }
}
