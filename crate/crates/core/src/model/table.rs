use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Value;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TableError {
    #[error("chart {id}: expected {expected} rows of cells, found {found}")]
    RowCount {
        id: String,
        expected: usize,
        found: usize,
    },
    #[error("chart {id}: row {row} has {found} cells, expected {expected}")]
    ColumnCount {
        id: String,
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("chart {id}: duplicate series name {name:?}")]
    DuplicateSeries { id: String, name: String },
    #[error("chart {id}: empty cell at [{row}][{col}]")]
    EmptyCell { id: String, row: usize, col: usize },
    #[error("chart {id}: no series")]
    NoSeries { id: String },
    #[error("chart {id}: no x-axis labels")]
    NoLabels { id: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<String>,
}

impl Series {
    pub fn new(name: impl Into<String>, color: Option<&str>) -> Self {
        Self {
            name: name.into(),
            color: color.map(str::to_string),
        }
    }
}

/// Case-folded, whitespace-collapsed form used for every name comparison.
pub fn normalize_name(name: &str) -> String {
    name.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// The data table underlying one chart.
///
/// `cells[s][x]` holds the value of series `s` at x-axis label `x`.
/// Series names are unique after normalization. X-axis labels may repeat
/// (grouped PlotQA bar charts print the same year once per group); a
/// repeated label resolves to its first occurrence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawChart", into = "RawChart")]
pub struct ChartTable {
    id: String,
    series: Vec<Series>,
    x_labels: Vec<String>,
    cells: Vec<Vec<Value>>,
    x_title: Option<String>,
    y_title: Option<String>,
}

impl ChartTable {
    pub fn new(
        id: impl Into<String>,
        series: Vec<Series>,
        x_labels: Vec<String>,
        cells: Vec<Vec<Value>>,
    ) -> Result<Self, TableError> {
        let id = id.into();
        if series.is_empty() {
            return Err(TableError::NoSeries { id });
        }
        if x_labels.is_empty() {
            return Err(TableError::NoLabels { id });
        }
        if cells.len() != series.len() {
            return Err(TableError::RowCount {
                id,
                expected: series.len(),
                found: cells.len(),
            });
        }
        for (row, values) in cells.iter().enumerate() {
            if values.len() != x_labels.len() {
                return Err(TableError::ColumnCount {
                    id,
                    row,
                    expected: x_labels.len(),
                    found: values.len(),
                });
            }
            for (col, v) in values.iter().enumerate() {
                if matches!(v, Value::Text(t) if t.is_empty()) {
                    return Err(TableError::EmptyCell { id, row, col });
                }
            }
        }
        let mut seen = HashSet::new();
        for s in &series {
            if !seen.insert(normalize_name(&s.name)) {
                return Err(TableError::DuplicateSeries {
                    id,
                    name: s.name.clone(),
                });
            }
        }
        Ok(Self {
            id,
            series,
            x_labels,
            cells,
            x_title: None,
            y_title: None,
        })
    }

    /// Attaches axis titles. `x_title` is a singular noun naming the x-axis
    /// categories ("year"); `y_title` names the plotted quantity.
    pub fn with_titles(mut self, x_title: Option<String>, y_title: Option<String>) -> Self {
        self.x_title = x_title;
        self.y_title = y_title;
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn series(&self) -> &[Series] {
        &self.series
    }

    pub fn x_labels(&self) -> &[String] {
        &self.x_labels
    }

    pub fn cells(&self) -> &[Vec<Value>] {
        &self.cells
    }

    pub fn cell(&self, series: usize, label: usize) -> &Value {
        &self.cells[series][label]
    }

    pub fn x_title(&self) -> Option<&str> {
        self.x_title.as_deref()
    }

    pub fn y_title(&self) -> Option<&str> {
        self.y_title.as_deref()
    }

    pub fn is_single_series(&self) -> bool {
        self.series.len() == 1
    }

    /// Number of data cells: series × x-axis labels.
    pub fn underlying_length(&self) -> usize {
        self.series.len() * self.x_labels.len()
    }

    pub fn series_index(&self, name: &str) -> Option<usize> {
        let key = normalize_name(name);
        self.series.iter().position(|s| normalize_name(&s.name) == key)
    }

    pub fn label_index(&self, name: &str) -> Option<usize> {
        let key = normalize_name(name);
        self.x_labels.iter().position(|l| normalize_name(l) == key)
    }

    /// Renders the table in the `Header: ... | ...` / `Row i: ...` layout
    /// used by table-reading prompts, one row per x-axis label.
    pub fn linearize(&self) -> String {
        let mut out = String::from("Header: ");
        out.push_str(self.x_title.as_deref().map_or("Characteristic", |t| t));
        for s in &self.series {
            out.push_str(" | ");
            out.push_str(&s.name);
        }
        for (col, label) in self.x_labels.iter().enumerate() {
            out.push_str(&format!("\nRow {}: {}", col + 1, label));
            for row in &self.cells {
                out.push_str(" | ");
                out.push_str(&row[col].render());
            }
        }
        out
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BucketError {
    #[error("bucket edges are empty")]
    Empty,
    #[error("bucket edges must be strictly increasing")]
    NotIncreasing,
}

/// Index of the half-open interval `[edges[i], edges[i+1])` containing
/// `length`. Lengths past the last edge land in the final bucket and lengths
/// below the first edge in bucket 0.
pub fn bucket_length(length: usize, edges: &[usize]) -> Result<usize, BucketError> {
    validate_edges(edges)?;
    Ok(edges
        .iter()
        .rposition(|&edge| length >= edge)
        .unwrap_or(0))
}

pub fn validate_edges(edges: &[usize]) -> Result<(), BucketError> {
    if edges.is_empty() {
        return Err(BucketError::Empty);
    }
    if edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(BucketError::NotIncreasing);
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct RawChart {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x_title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    y_title: Option<String>,
    series: Vec<Series>,
    x_labels: Vec<String>,
    cells: Vec<Vec<Value>>,
}

impl TryFrom<RawChart> for ChartTable {
    type Error = TableError;

    fn try_from(raw: RawChart) -> Result<Self, Self::Error> {
        Ok(ChartTable::new(raw.id, raw.series, raw.x_labels, raw.cells)?
            .with_titles(raw.x_title, raw.y_title))
    }
}

impl From<ChartTable> for RawChart {
    fn from(t: ChartTable) -> Self {
        RawChart {
            id: t.id,
            x_title: t.x_title,
            y_title: t.y_title,
            series: t.series,
            x_labels: t.x_labels,
            cells: t.cells,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: usize, cols: usize) -> ChartTable {
        ChartTable::new(
            "t",
            (0..rows).map(|i| Series::new(format!("s{i}"), None)).collect(),
            (0..cols).map(|i| format!("x{i}")).collect(),
            (0..rows)
                .map(|r| (0..cols).map(|c| Value::parse(&(r * cols + c).to_string())).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn length_is_cell_count() {
        assert_eq!(table(2, 7).underlying_length(), 14);
        assert_eq!(table(1, 4).underlying_length(), 4);
        let t = table(3, 5);
        let reachable = t.series().iter().flat_map(|_| t.x_labels()).count();
        assert_eq!(t.underlying_length(), reachable);
    }

    #[test]
    fn buckets() {
        assert_eq!(bucket_length(14, &[0, 10, 20, 40]), Ok(1));
        assert_eq!(bucket_length(0, &[0, 10]), Ok(0));
        assert_eq!(bucket_length(100, &[0, 10, 20, 40]), Ok(3));
        assert_eq!(bucket_length(10, &[0, 10, 20, 40]), Ok(1));
        assert_eq!(bucket_length(3, &[5, 10]), Ok(0));
        assert_eq!(bucket_length(3, &[]), Err(BucketError::Empty));
        assert_eq!(bucket_length(3, &[0, 10, 10]), Err(BucketError::NotIncreasing));
    }

    #[test]
    fn rejects_malformed_tables() {
        let s = vec![Series::new("A", None), Series::new(" a ", None)];
        let err = ChartTable::new("t", s, vec!["x".into()], vec![vec!["1".into()], vec!["2".into()]]);
        assert!(matches!(err, Err(TableError::DuplicateSeries { .. })));

        let err = ChartTable::new("t", vec![Series::new("A", None)], vec!["x".into()], vec![]);
        assert!(matches!(err, Err(TableError::RowCount { .. })));

        let err = ChartTable::new(
            "t",
            vec![Series::new("A", None)],
            vec!["x".into(), "y".into()],
            vec![vec!["1".into()]],
        );
        assert!(matches!(err, Err(TableError::ColumnCount { .. })));

        let err = ChartTable::new("t", vec![Series::new("A", None)], vec!["x".into()], vec![vec![Value::Text(String::new())]]);
        assert!(matches!(err, Err(TableError::EmptyCell { .. })));
    }

    #[test]
    fn json_schema_round_trip() {
        let json = r#"{"id":"c1","series":[{"name":"Oman","color":"brown"},{"name":"Samoa"}],
            "x_labels":["2008","2009"],"cells":[[183.88,"233.80"],[40.72,40.04]]}"#;
        let t: ChartTable = serde_json::from_str(json).unwrap();
        assert_eq!(t.cell(0, 1).render(), "233.80");
        assert_eq!(t.series()[1].color, None);
        let back: ChartTable = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(back, t);

        let bad = r#"{"id":"c","series":[{"name":"A"}],"x_labels":["x"],"cells":[[1,2]]}"#;
        assert!(serde_json::from_str::<ChartTable>(bad).is_err());
    }

    #[test]
    fn linearizes_rows_per_label() {
        let t = table(2, 2);
        assert_eq!(
            t.linearize(),
            "Header: Characteristic | s0 | s1\nRow 1: x0 | 0 | 2\nRow 2: x1 | 1 | 3"
        );
    }
}
