//! Shared domain types: chart tables, values, QA instances and traces.

mod qa;
mod table;
mod trace;
mod value;

pub use qa::{QAInstance, TemplateType};
pub use table::{
    bucket_length, normalize_name, validate_edges, BucketError, ChartTable, Series, TableError,
};
pub use trace::{ReasoningTrace, Step, StepRole, Termination, TraceError};
pub use value::{Number, Value};
