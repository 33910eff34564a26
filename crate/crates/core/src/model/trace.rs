use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRole {
    ReasonerQuery,
    ReaderAnswer,
    Conclusion,
    /// A reasoner line outside the query/conclusion vocabulary, carried verbatim.
    ProtocolError,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub role: StepRole,
    pub text: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Conclusion,
    MaxSteps,
    BackendError,
    ParseError,
}

/// The ordered exchange between reasoner and reader for one episode.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReasoningTrace {
    pub steps: Vec<Step>,
    #[serde(rename = "final")]
    pub final_answer: Option<Value>,
    pub terminated_by: Termination,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TraceError {
    #[error("step {0}: reader answer without a preceding reasoner query")]
    OrphanAnswer(usize),
    #[error("step {0}: conclusion is not the last step")]
    ConclusionNotLast(usize),
    #[error("more than one conclusion step")]
    MultipleConclusions,
    #[error("final answer present but episode did not end with a conclusion")]
    UnexpectedFinal,
    #[error("episode ended with a conclusion but has no final answer")]
    MissingFinal,
    #[error("episode ended with a conclusion but has no conclusion step")]
    MissingConclusionStep,
}

impl ReasoningTrace {
    pub fn validate(&self) -> Result<(), TraceError> {
        let conclusions = self
            .steps
            .iter()
            .filter(|s| s.role == StepRole::Conclusion)
            .count();
        if conclusions > 1 {
            return Err(TraceError::MultipleConclusions);
        }
        for (i, step) in self.steps.iter().enumerate() {
            match step.role {
                StepRole::ReaderAnswer => {
                    let prev = i.checked_sub(1).map(|p| self.steps[p].role);
                    if prev != Some(StepRole::ReasonerQuery) {
                        return Err(TraceError::OrphanAnswer(i));
                    }
                }
                StepRole::Conclusion => {
                    if i + 1 != self.steps.len() {
                        return Err(TraceError::ConclusionNotLast(i));
                    }
                }
                StepRole::ReasonerQuery | StepRole::ProtocolError => {}
            }
        }
        match (self.terminated_by, &self.final_answer) {
            (Termination::Conclusion, None) => Err(TraceError::MissingFinal),
            (Termination::Conclusion, Some(_)) if conclusions == 0 => {
                Err(TraceError::MissingConclusionStep)
            }
            (Termination::Conclusion, Some(_)) => Ok(()),
            (_, Some(_)) => Err(TraceError::UnexpectedFinal),
            (_, None) => Ok(()),
        }
    }

    pub fn queries(&self) -> impl Iterator<Item = &str> {
        self.steps
            .iter()
            .filter(|s| s.role == StepRole::ReasonerQuery)
            .map(|s| s.text.as_str())
    }
}
