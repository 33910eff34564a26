//! The line protocol spoken between the reasoner and the reader.
//!
//! Queries use three fixed surface forms:
//!
//! ```text
//! Let's describe the figure.
//! Let's extract the data of <entity> BY <entity2>.
//! Let's extract the data of <entity>.
//! Let's extract all the values.
//! ```
//!
//! Reader answers are either a description
//! (`The figure shows the data of: A (blue) | B. The x-axis shows: x1 | x2.`),
//! a scalar (`The data is 20.82.`) or an enumerated group
//! (`The data is 0.16 in Merchandise exports, 0.36 in Merchandise imports.`).

use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Series, Value};

pub const DESCRIBE_QUERY: &str = "Let's describe the figure.";
pub const ALL_VALUES_QUERY: &str = "Let's extract all the values.";
pub const NOT_AVAILABLE: &str = "The data is not available.";

const EXTRACT_PREFIX: &str = "Let's extract the data of ";
const BY_SEPARATOR: &str = " BY ";
const DESCRIPTION_PREFIX: &str = "The figure shows the data of: ";
const AXIS_SEPARATOR: &str = ". The x-axis shows: ";
const DATA_PREFIX: &str = "The data is ";
const LIST_SEPARATOR: &str = " | ";

static GROUP_PAIR: Lazy<Regex> = Lazy::new(|| Regex::new(r"^(\S+) in (.+)$").unwrap());

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum AtomicQuery {
    Describe,
    /// Without `by`, the query shares its surface form with a named group
    /// extraction; the reader disambiguates from the chart.
    ExtractPoint {
        entity: String,
        by: Option<String>,
    },
    /// `entity: None` asks for every value of a single-series chart.
    ExtractGroup { entity: Option<String> },
}

impl AtomicQuery {
    pub fn point(entity: impl Into<String>, by: impl Into<String>) -> Self {
        AtomicQuery::ExtractPoint {
            entity: entity.into(),
            by: Some(by.into()),
        }
    }

    pub fn group(entity: impl Into<String>) -> Self {
        AtomicQuery::ExtractGroup {
            entity: Some(entity.into()),
        }
    }

    /// The query that [`parse_step`] recovers from [`format_query`] output:
    /// uppercase ` BY ` inside entity names is escaped to ` By `, and a
    /// point query without `by` reads back as a named group query.
    pub fn canonical(&self) -> AtomicQuery {
        match self {
            AtomicQuery::Describe => AtomicQuery::Describe,
            AtomicQuery::ExtractPoint { entity, by: None } => AtomicQuery::ExtractGroup {
                entity: Some(escape_entity(entity)),
            },
            AtomicQuery::ExtractPoint {
                entity,
                by: Some(by),
            } => AtomicQuery::ExtractPoint {
                entity: escape_entity(entity),
                by: Some(escape_entity(by)),
            },
            AtomicQuery::ExtractGroup { entity } => AtomicQuery::ExtractGroup {
                entity: entity.as_deref().map(escape_entity),
            },
        }
    }
}

fn escape_entity(entity: &str) -> String {
    entity.replace(BY_SEPARATOR, " By ")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepKind {
    Query(AtomicQuery),
    /// A line ending in "... answer is X."; `text` is the full line.
    Conclusion { answer: Value, text: String },
    Other(String),
}

/// Classifies one reasoner line. Never fails: anything outside the
/// protocol comes back as [`StepKind::Other`].
pub fn parse_step(line: &str) -> StepKind {
    let trimmed = line.trim();
    if let Some(q) = parse_query(trimmed) {
        return StepKind::Query(q);
    }
    if let Some(answer) = conclusion_answer(trimmed) {
        return StepKind::Conclusion {
            answer: Value::parse(answer),
            text: trimmed.to_string(),
        };
    }
    StepKind::Other(trimmed.to_string())
}

fn parse_query(line: &str) -> Option<AtomicQuery> {
    if line == DESCRIBE_QUERY {
        return Some(AtomicQuery::Describe);
    }
    if line == ALL_VALUES_QUERY {
        return Some(AtomicQuery::ExtractGroup { entity: None });
    }
    let body = line.strip_prefix(EXTRACT_PREFIX)?.strip_suffix('.')?;
    if body.trim().is_empty() {
        return None;
    }
    match body.rsplit_once(BY_SEPARATOR) {
        Some((entity, by)) if !entity.trim().is_empty() && !by.trim().is_empty() => {
            Some(AtomicQuery::ExtractPoint {
                entity: entity.to_string(),
                by: Some(by.to_string()),
            })
        }
        _ => Some(AtomicQuery::ExtractGroup {
            entity: Some(body.to_string()),
        }),
    }
}

/// The answer text of a concluding sentence: everything after the last
/// "answer is " up to the terminal period.
pub fn conclusion_answer(line: &str) -> Option<&str> {
    let idx = line.rfind("answer is ")?;
    let rest = line[idx + "answer is ".len()..].trim_end();
    let rest = rest.strip_suffix('.').unwrap_or(rest).trim();
    (!rest.is_empty()).then_some(rest)
}

pub fn format_query(q: &AtomicQuery) -> String {
    match q {
        AtomicQuery::Describe => DESCRIBE_QUERY.to_string(),
        AtomicQuery::ExtractGroup { entity: None } => ALL_VALUES_QUERY.to_string(),
        AtomicQuery::ExtractGroup {
            entity: Some(entity),
        }
        | AtomicQuery::ExtractPoint { entity, by: None } => {
            format!("{EXTRACT_PREFIX}{}.", escape_entity(entity))
        }
        AtomicQuery::ExtractPoint {
            entity,
            by: Some(by),
        } => format!(
            "{EXTRACT_PREFIX}{}{BY_SEPARATOR}{}.",
            escape_entity(entity),
            escape_entity(by)
        ),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReaderAnswer {
    Description {
        series: Vec<Series>,
        x_labels: Vec<String>,
    },
    Scalar(Value),
    /// `(key, value)` pairs in the order the reader listed them.
    Group(Vec<(String, Value)>),
    /// Anything else, including the not-available sentinel; raw text kept.
    Unavailable(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormatError {
    #[error("an unavailable reader answer has no canonical form")]
    Unavailable,
    #[error("a group answer needs at least one pair")]
    EmptyGroup,
}

pub fn parse_reader_answer(text: &str) -> ReaderAnswer {
    let trimmed = text.trim();
    if trimmed == NOT_AVAILABLE {
        return ReaderAnswer::Unavailable(trimmed.to_string());
    }
    if let Some(rest) = trimmed.strip_prefix(DESCRIPTION_PREFIX) {
        if let Some(answer) = parse_description(rest) {
            return answer;
        }
    } else if let Some(body) = trimmed
        .strip_prefix(DATA_PREFIX)
        .and_then(|b| b.strip_suffix('.'))
    {
        if GROUP_PAIR.is_match(body) {
            if let Some(pairs) = parse_pairs(body) {
                return ReaderAnswer::Group(pairs);
            }
        } else if !body.trim().is_empty() {
            return ReaderAnswer::Scalar(Value::parse(body));
        }
    }
    ReaderAnswer::Unavailable(trimmed.to_string())
}

fn parse_description(rest: &str) -> Option<ReaderAnswer> {
    let (series_part, labels_part) = rest.split_once(AXIS_SEPARATOR)?;
    let labels_part = labels_part.strip_suffix('.')?;
    let series = split_list(series_part)
        .into_iter()
        .map(|item| match item.strip_suffix(')').and_then(|s| s.rsplit_once(" (")) {
            Some((name, color)) if !name.is_empty() => Series::new(name, Some(color)),
            _ => Series::new(item, None),
        })
        .collect();
    let x_labels = split_list(labels_part)
        .into_iter()
        .map(str::to_string)
        .collect();
    Some(ReaderAnswer::Description { series, x_labels })
}

fn split_list(s: &str) -> Vec<&str> {
    if s.is_empty() {
        Vec::new()
    } else {
        s.split(LIST_SEPARATOR).collect()
    }
}

/// Splits `v1 in k1, v2 in k2, ...`. A comma-separated piece that does not
/// start a new `value in key` pair belongs to the previous key
/// ("120000.0 in Gambia, The").
fn parse_pairs(body: &str) -> Option<Vec<(String, Value)>> {
    let mut pairs: Vec<(String, Value)> = Vec::new();
    for piece in body.split(", ") {
        match GROUP_PAIR.captures(piece) {
            Some(c) => pairs.push((c[2].to_string(), Value::parse(&c[1]))),
            None => {
                let (key, _) = pairs.last_mut()?;
                key.push_str(", ");
                key.push_str(piece);
            }
        }
    }
    Some(pairs)
}

pub fn format_reader_answer(answer: &ReaderAnswer) -> Result<String, FormatError> {
    match answer {
        ReaderAnswer::Unavailable(_) => Err(FormatError::Unavailable),
        ReaderAnswer::Scalar(v) => Ok(format!("{DATA_PREFIX}{v}.")),
        ReaderAnswer::Group(pairs) if pairs.is_empty() => Err(FormatError::EmptyGroup),
        ReaderAnswer::Group(pairs) => {
            let body = pairs
                .iter()
                .map(|(k, v)| format!("{v} in {k}"))
                .collect::<Vec<_>>()
                .join(", ");
            Ok(format!("{DATA_PREFIX}{body}."))
        }
        ReaderAnswer::Description { series, x_labels } => Ok(format_description(series, x_labels)),
    }
}

pub fn format_description(series: &[Series], x_labels: &[String]) -> String {
    let series = series
        .iter()
        .map(|s| match &s.color {
            Some(c) => format!("{} ({c})", s.name),
            None => s.name.clone(),
        })
        .collect::<Vec<_>>()
        .join(LIST_SEPARATOR);
    format!(
        "{DESCRIPTION_PREFIX}{series}{AXIS_SEPARATOR}{}.",
        x_labels.join(LIST_SEPARATOR)
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn classifies_paper_lines() {
        assert_eq!(parse_step("Let's describe the figure."), StepKind::Query(AtomicQuery::Describe));
        assert_eq!(
            parse_step("Let's extract the data of Canada BY 1965."),
            StepKind::Query(AtomicQuery::point("Canada", "1965"))
        );
        assert_eq!(
            parse_step("Let's extract all the values."),
            StepKind::Query(AtomicQuery::ExtractGroup { entity: None })
        );
        match parse_step("The minimum value is 14.92 in 2011. So the answer is 14.92.") {
            StepKind::Conclusion { answer, .. } => assert_eq!(answer, Value::parse("14.92")),
            other => panic!("{other:?}"),
        }
        match parse_step("The answer is 7.54.") {
            StepKind::Conclusion { answer, .. } => assert_eq!(answer.render(), "7.54"),
            other => panic!("{other:?}"),
        }
        assert_eq!(
            parse_step("Let's find the row of Turkey."),
            StepKind::Other("Let's find the row of Turkey.".into())
        );
        assert!(matches!(parse_step("So the answer is ."), StepKind::Other(_)));
        assert!(matches!(parse_step("Let's extract the data of ."), StepKind::Other(_)));
    }

    #[test]
    fn by_splits_on_last_separator() {
        assert_eq!(
            parse_step("Let's extract the data of A BY B BY 2001."),
            StepKind::Query(AtomicQuery::point("A BY B", "2001"))
        );
        let q = AtomicQuery::point("Made BY Hand", "2001");
        assert_eq!(format_query(&q), "Let's extract the data of Made By Hand BY 2001.");
        assert_eq!(parse_step(&format_query(&q)), StepKind::Query(q.canonical()));
    }

    #[test]
    fn formats_queries() {
        assert_eq!(format_query(&AtomicQuery::Describe), "Let's describe the figure.");
        assert_eq!(
            format_query(&AtomicQuery::group("Total market")),
            "Let's extract the data of Total market."
        );
        assert_eq!(
            format_query(&AtomicQuery::ExtractGroup { entity: None }),
            "Let's extract all the values."
        );
        let point = AtomicQuery::ExtractPoint {
            entity: "2015".into(),
            by: None,
        };
        assert_eq!(format_query(&point), "Let's extract the data of 2015.");
        assert_eq!(parse_step(&format_query(&point)), StepKind::Query(AtomicQuery::group("2015")));
    }

    #[test]
    fn parses_reader_answers() {
        assert_eq!(
            parse_reader_answer("The data is 20.82."),
            ReaderAnswer::Scalar(Value::parse("20.82"))
        );
        assert_eq!(
            parse_reader_answer("The data is 0.16 in Merchandise exports, 0.36 in Merchandise imports."),
            ReaderAnswer::Group(vec![
                ("Merchandise exports".into(), Value::parse("0.16")),
                ("Merchandise imports".into(), Value::parse("0.36")),
            ])
        );
        let desc = parse_reader_answer(
            "The figure shows the data of: Oman (brown) | Samoa (dark blue). The x-axis shows: 2008 | 2009 | 2010 | 2011 | 2012 | 2013 | 2014.",
        );
        match desc {
            ReaderAnswer::Description { series, x_labels } => {
                assert_eq!(series, vec![Series::new("Oman", Some("brown")), Series::new("Samoa", Some("dark blue"))]);
                assert_eq!(x_labels.len(), 7);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_reader_answer(NOT_AVAILABLE), ReaderAnswer::Unavailable(_)));
        assert_eq!(
            parse_reader_answer("I cannot see the chart."),
            ReaderAnswer::Unavailable("I cannot see the chart.".into())
        );
    }

    #[test]
    fn comma_inside_group_key() {
        let text = "The data is 100000.0 in Gabon, 120000.0 in Gambia, The, 12170000.0 in Germany.";
        let ReaderAnswer::Group(pairs) = parse_reader_answer(text) else {
            panic!()
        };
        assert_eq!(pairs[1].0, "Gambia, The");
        assert_eq!(format_reader_answer(&ReaderAnswer::Group(pairs)).unwrap(), text);
    }

    #[test]
    fn formats_reader_answers() {
        assert_eq!(
            format_reader_answer(&ReaderAnswer::Scalar(Value::parse("7.54"))).unwrap(),
            "The data is 7.54."
        );
        assert_eq!(
            format_reader_answer(&ReaderAnswer::Group(vec![
                ("2019".into(), Value::parse("18")),
                ("2018".into(), Value::parse("20.0")),
            ]))
            .unwrap(),
            "The data is 18 in 2019, 20.0 in 2018."
        );
        assert_eq!(
            format_reader_answer(&ReaderAnswer::Description {
                series: vec![Series::new("Value", None)],
                x_labels: vec!["Decreased".into(), "No impact".into(), "Increased".into()],
            })
            .unwrap(),
            "The figure shows the data of: Value. The x-axis shows: Decreased | No impact | Increased."
        );
        assert_eq!(
            format_reader_answer(&ReaderAnswer::Unavailable("x".into())),
            Err(FormatError::Unavailable)
        );
        assert_eq!(format_reader_answer(&ReaderAnswer::Group(vec![])), Err(FormatError::EmptyGroup));
    }

    fn name() -> impl Strategy<Value = String> {
        "[A-Za-z0-9][A-Za-z0-9/*'&-]{0,6}( [A-Za-z0-9/*'&-]{1,6}){0,3}"
    }

    fn query() -> impl Strategy<Value = AtomicQuery> {
        prop_oneof![
            Just(AtomicQuery::Describe),
            (name(), name()).prop_map(|(e, b)| AtomicQuery::point(e, b)),
            (name(), proptest::option::of(name())).prop_map(|(e, b)| AtomicQuery::ExtractPoint { entity: e, by: b }),
            proptest::option::of(name()).prop_map(|e| AtomicQuery::ExtractGroup { entity: e }),
        ]
    }

    fn number() -> impl Strategy<Value = Value> {
        (-100_000i64..100_000, 0u32..4).prop_map(|(i, s)| Value::number(rust_decimal::Decimal::new(i, s)))
    }

    fn answer() -> impl Strategy<Value = ReaderAnswer> {
        let series = (name(), proptest::option::of("[a-z]{3,6}( [a-z]{3,5})?"))
            .prop_map(|(n, c)| Series { name: n, color: c });
        prop_oneof![
            number().prop_map(ReaderAnswer::Scalar),
            proptest::collection::vec((name(), number()), 1..6).prop_map(ReaderAnswer::Group),
            (
                proptest::collection::vec(series, 0..5),
                proptest::collection::vec(name(), 0..8)
            )
                .prop_map(|(series, x_labels)| ReaderAnswer::Description { series, x_labels }),
        ]
    }

    proptest! {
        #[test]
        fn query_round_trip(q in query()) {
            prop_assert_eq!(parse_step(&format_query(&q)), StepKind::Query(q.canonical()));
        }

        #[test]
        fn entities_with_by_are_stable(a in name(), b in name(), c in name()) {
            let q = AtomicQuery::point(format!("{a} BY {b}"), c);
            let once = format_query(&q);
            let StepKind::Query(parsed) = parse_step(&once) else { panic!() };
            prop_assert_eq!(format_query(&parsed), once);
        }

        #[test]
        fn answer_round_trip(a in answer()) {
            let text = format_reader_answer(&a).unwrap();
            prop_assert_eq!(parse_reader_answer(&text), a);
        }

        #[test]
        fn parse_step_is_total(s in "\\PC{0,80}") {
            let _ = parse_step(&s);
            let _ = parse_reader_answer(&s);
        }
    }
}
