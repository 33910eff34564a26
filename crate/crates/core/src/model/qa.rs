use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Value;

/// Question families of the PlotQA error breakdown.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateType {
    DataRetrieval,
    Structural,
    Arithmetic,
    Compound,
    Comparison,
    MinMax,
}

impl TemplateType {
    pub const ALL: [TemplateType; 6] = [
        TemplateType::DataRetrieval,
        TemplateType::Structural,
        TemplateType::Arithmetic,
        TemplateType::Compound,
        TemplateType::Comparison,
        TemplateType::MinMax,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateType::DataRetrieval => "data_retrieval",
            TemplateType::Structural => "structural",
            TemplateType::Arithmetic => "arithmetic",
            TemplateType::Compound => "compound",
            TemplateType::Comparison => "comparison",
            TemplateType::MinMax => "min_max",
        }
    }
}

impl fmt::Display for TemplateType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateType {
    type Err = String;

    /// Accepts snake_case names as well as the spaced/hyphenated spellings
    /// used in PlotQA annotations ("Data Retrieval", "Min-Max").
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .trim()
            .to_lowercase()
            .chars()
            .map(|c| if c == ' ' || c == '-' { '_' } else { c })
            .collect();
        match key.as_str() {
            "data_retrieval" => Ok(TemplateType::DataRetrieval),
            "structural" => Ok(TemplateType::Structural),
            "arithmetic" => Ok(TemplateType::Arithmetic),
            "compound" => Ok(TemplateType::Compound),
            "comparison" => Ok(TemplateType::Comparison),
            "min_max" | "minmax" => Ok(TemplateType::MinMax),
            _ => Err(format!("unknown template type {s:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAInstance {
    pub question: String,
    pub gold: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template_type: Option<TemplateType>,
    pub chart_id: String,
}
