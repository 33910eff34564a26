//! Brute-force answers straight from the table.

use rust_decimal::Decimal;
use serde::Serialize;

use super::{QuestionPlan, Reduce, SymbolicError};
use crate::model::{ChartTable, Value};
use crate::protocol::AtomicQuery;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GoldComputation {
    pub answer: Value,
    /// Intermediate values, for debugging mismatches.
    pub derivation: String,
}

fn series_of(table: &ChartTable, name: &str) -> Result<usize, SymbolicError> {
    table
        .series_index(name)
        .ok_or_else(|| SymbolicError::UnresolvedEntity(name.to_string()))
}

fn label_of(table: &ChartTable, name: &str) -> Result<usize, SymbolicError> {
    table
        .label_index(name)
        .ok_or_else(|| SymbolicError::UnresolvedEntity(name.to_string()))
}

/// Cells addressed by one extraction query, keyed by the other axis.
fn cells_for(table: &ChartTable, q: &AtomicQuery) -> Result<Vec<(String, Value)>, SymbolicError> {
    Ok(match q {
        AtomicQuery::Describe => Vec::new(),
        AtomicQuery::ExtractPoint { entity, by: Some(by) } => {
            let s = series_of(table, entity)?;
            let l = label_of(table, by)?;
            vec![(by.clone(), table.cell(s, l).clone())]
        }
        AtomicQuery::ExtractPoint { entity, by: None } => {
            if !table.is_single_series() {
                return Err(SymbolicError::UnresolvedEntity(entity.clone()));
            }
            let l = label_of(table, entity)?;
            vec![(entity.clone(), table.cell(0, l).clone())]
        }
        AtomicQuery::ExtractGroup { entity } => {
            let s = match entity {
                Some(e) => series_of(table, e)?,
                None if table.is_single_series() => 0,
                None => return Err(SymbolicError::UnresolvedEntity("<all values>".into())),
            };
            table
                .x_labels()
                .iter()
                .cloned()
                .zip(table.cells()[s].iter().cloned())
                .collect()
        }
    })
}

fn decimal(v: &Value) -> Result<Decimal, SymbolicError> {
    v.as_decimal()
        .ok_or_else(|| SymbolicError::NonNumeric(v.render()))
}

fn arg(plan: &QuestionPlan, i: usize) -> Result<&Value, SymbolicError> {
    plan.reduce_args
        .get(i)
        .ok_or(SymbolicError::Plan(super::PlanError::MissingArgument(plan.reduce)))
}

fn rounded(d: Decimal) -> Decimal {
    d.round_sf(6).unwrap_or(d).normalize()
}

/// Evaluates `plan` by direct table lookup and exhaustive scans.
pub fn compute_gold(table: &ChartTable, plan: &QuestionPlan) -> Result<GoldComputation, SymbolicError> {
    plan.validate()?;
    let mut cells = Vec::new();
    for q in plan.extraction_queries() {
        cells.extend(cells_for(table, q)?);
    }
    let derivation = format!(
        "{:?} over [{}]",
        plan.reduce,
        cells
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    let nums = || cells.iter().map(|(_, v)| decimal(v)).collect::<Result<Vec<_>, _>>();
    // Stable sort by value keeps the lower index first among equals.
    let sorted_by_value = || -> Result<Vec<(usize, Decimal)>, SymbolicError> {
        let mut v: Vec<(usize, Decimal)> = nums()?.into_iter().enumerate().collect();
        v.sort_by(|a, b| a.1.cmp(&b.1));
        Ok(v)
    };
    let count = |n: usize| Value::number(Decimal::from(n));
    let answer = match plan.reduce {
        Reduce::Identity => cells[0].1.clone(),
        Reduce::Sum => Value::number(nums()?.iter().sum()),
        Reduce::Difference => {
            let n = nums()?;
            Value::number(n[0] - n[1])
        }
        Reduce::Ratio => {
            let n = nums()?;
            if n[1].is_zero() {
                return Err(SymbolicError::UndefinedResult(format!("{} / 0", n[0])));
            }
            Value::number(rounded(n[0] / n[1]))
        }
        Reduce::Average => {
            let n = nums()?;
            let total: Decimal = n.iter().sum();
            Value::number(rounded(total / Decimal::from(n.len())))
        }
        Reduce::Min => Value::number(sorted_by_value()?[0].1),
        Reduce::Max => {
            let s = sorted_by_value()?;
            Value::number(s[s.len() - 1].1)
        }
        Reduce::ArgMin => {
            let s = sorted_by_value()?;
            Value::parse(&cells[s[0].0].0)
        }
        Reduce::ArgMax => {
            let s = sorted_by_value()?;
            let top = s[s.len() - 1].1;
            let first = s.iter().find(|(_, v)| *v == top).expect("max present");
            Value::parse(&cells[first.0].0)
        }
        Reduce::CountGreater | Reduce::CountLess => {
            let t = decimal(arg(plan, 0)?)?;
            let greater = plan.reduce == Reduce::CountGreater;
            count(nums()?.iter().filter(|&&v| if greater { v > t } else { v < t }).count())
        }
        Reduce::CountAboveAverage => {
            let n = nums()?;
            let total: Decimal = n.iter().sum();
            let mean = total / Decimal::from(n.len());
            count(n.iter().filter(|&&v| v > mean).count())
        }
        Reduce::SecondHighest => {
            let s = sorted_by_value()?;
            Value::number(s[s.len() - 2].1)
        }
        Reduce::CompareYesNo => {
            let n = nums()?;
            Value::YesNo(n[0] > n[1])
        }
        Reduce::SumTwoSmallestVsLargest => {
            let s = sorted_by_value()?;
            Value::YesNo(s[0].1 + s[1].1 > s[s.len() - 1].1)
        }
        Reduce::ArgMatch => {
            let t = decimal(arg(plan, 0)?)?;
            let hit = cells
                .iter()
                .find(|(_, v)| v.as_decimal() == Some(t))
                .ok_or_else(|| SymbolicError::UndefinedResult(format!("no value equals {t}")))?;
            Value::parse(&hit.0)
        }
        Reduce::CountSeries => count(table.series().len()),
        Reduce::CountXLabels => count(table.x_labels().len()),
    };
    Ok(GoldComputation { answer, derivation })
}
