//! Rule-based reasoner for template questions.
//!
//! Questions come from a fixed grammar ([`templates`]). Each grammar form
//! maps to a [`QuestionPlan`]: the atomic queries to send to the reader and
//! the reduction that turns their answers into the final value. Gold answers
//! are computed straight from the table by [`compute_gold`], independently
//! of the query protocol, so a closed loop of this reasoner and the table
//! oracle can be checked end to end.

mod deduce;
mod gold;
mod reasoner;
mod templates;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{TemplateType, Value};
use crate::protocol::AtomicQuery;

pub use deduce::{deduce, Deduction, UNKNOWN_CONCLUSION};
pub use gold::{compute_gold, GoldComputation};
pub use reasoner::SymbolicReasoner;
pub use templates::{classify, decompose, gen_questions, DecomposeOptions, Form, FormKind, Shape};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduce {
    Identity,
    Sum,
    Difference,
    Ratio,
    Average,
    Min,
    Max,
    ArgMin,
    ArgMax,
    CountGreater,
    CountLess,
    CountAboveAverage,
    SecondHighest,
    /// First value strictly greater than the second → yes.
    CompareYesNo,
    /// Sum of the two smallest values strictly greater than the largest → yes.
    SumTwoSmallestVsLargest,
    /// Key of the first value equal to the target.
    ArgMatch,
    CountSeries,
    CountXLabels,
}

impl Reduce {
    /// Number of extracted values the reduction consumes, when fixed.
    pub fn exact_arity(self) -> Option<usize> {
        match self {
            Reduce::Identity => Some(1),
            Reduce::Difference | Reduce::Ratio | Reduce::CompareYesNo => Some(2),
            _ => None,
        }
    }

    pub fn min_arity(self) -> usize {
        match self {
            Reduce::CountSeries | Reduce::CountXLabels => 0,
            Reduce::Identity
            | Reduce::Min
            | Reduce::Max
            | Reduce::ArgMin
            | Reduce::ArgMax
            | Reduce::CountGreater
            | Reduce::CountLess
            | Reduce::CountAboveAverage
            | Reduce::ArgMatch => 1,
            Reduce::Sum
            | Reduce::Difference
            | Reduce::Ratio
            | Reduce::Average
            | Reduce::SecondHighest
            | Reduce::CompareYesNo => 2,
            Reduce::SumTwoSmallestVsLargest => 3,
        }
    }

    /// Reductions that need the chart description rather than extracted values.
    pub fn needs_description(self) -> bool {
        matches!(self, Reduce::CountSeries | Reduce::CountXLabels)
    }

    /// Whether results are keyed by x-label/series (one group extraction).
    pub fn needs_keys(self) -> bool {
        matches!(self, Reduce::ArgMin | Reduce::ArgMax | Reduce::ArgMatch)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionPlan {
    pub template_type: TemplateType,
    pub queries: Vec<AtomicQuery>,
    pub reduce: Reduce,
    pub reduce_args: Vec<Value>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlanError {
    #[error("plan has no queries")]
    NoQueries,
    #[error("{reduce:?} needs {expected} extracted values, plan yields {found}")]
    Arity {
        reduce: Reduce,
        expected: usize,
        found: usize,
    },
    #[error("{0:?} needs a Describe query")]
    MissingDescribe(Reduce),
    #[error("{0:?} needs a threshold or target argument")]
    MissingArgument(Reduce),
}

impl QuestionPlan {
    pub fn extraction_queries(&self) -> impl Iterator<Item = &AtomicQuery> {
        self.queries
            .iter()
            .filter(|q| !matches!(q, AtomicQuery::Describe))
    }

    pub fn has_describe(&self) -> bool {
        self.queries.contains(&AtomicQuery::Describe)
    }

    /// Checks the query list against the reduction's arity. Group queries
    /// count as "many"; point queries count one each.
    pub fn validate(&self) -> Result<(), PlanError> {
        if self.queries.is_empty() {
            return Err(PlanError::NoQueries);
        }
        if self.reduce.needs_description() && !self.has_describe() {
            return Err(PlanError::MissingDescribe(self.reduce));
        }
        let needs_arg = matches!(
            self.reduce,
            Reduce::CountGreater | Reduce::CountLess | Reduce::ArgMatch
        );
        if needs_arg && self.reduce_args.is_empty() {
            return Err(PlanError::MissingArgument(self.reduce));
        }
        let points = self
            .extraction_queries()
            .filter(|q| matches!(q, AtomicQuery::ExtractPoint { .. }))
            .count();
        let groups = self.extraction_queries().count() - points;
        let fixed = self.reduce.exact_arity();
        let ok = match (points, groups) {
            (0, 0) => self.reduce.needs_description(),
            (p, 0) => fixed.map_or(p >= self.reduce.min_arity(), |n| n == p) && !self.reduce.needs_keys(),
            (0, 1) => fixed.is_none() && !self.reduce.needs_description(),
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(PlanError::Arity {
                reduce: self.reduce,
                expected: fixed.unwrap_or(self.reduce.min_arity()),
                found: points + groups,
            })
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SymbolicError {
    #[error("chart {chart} is too small or unsuitable for {template} questions")]
    SkippedTemplate { chart: String, template: TemplateType },
    #[error("question does not match the template grammar: {0:?}")]
    NotTemplated(String),
    #[error("question needs the chart description, which is disabled: {0:?}")]
    NeedsDescription(String),
    #[error("entity {0:?} not found in the table")]
    UnresolvedEntity(String),
    #[error("undefined result: {0}")]
    UndefinedResult(String),
    #[error("non-numeric value {0:?} in a numeric reduction")]
    NonNumeric(String),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("expected {expected} reader answers, got {found}")]
    Misaligned { expected: usize, found: usize },
}
