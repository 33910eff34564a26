use super::templates::DecomposeOptions;
use super::{decompose, deduce, UNKNOWN_CONCLUSION};
use crate::controller::{split_generation, BackendError, CompletionRequest, ReasonerBackend};
use crate::protocol::{format_query, parse_reader_answer, parse_step, ReaderAnswer, StepKind};

/// Stateless rule-based reasoner. Each call re-reads the question and the
/// exchange so far from the prompt and emits the next line: the next query
/// of the plan, or the conclusion once every query has been answered.
/// Questions outside the grammar get the unknown conclusion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SymbolicReasoner {
    pub describe_first: bool,
}

impl Default for SymbolicReasoner {
    fn default() -> Self {
        SymbolicReasoner { describe_first: true }
    }
}

impl SymbolicReasoner {
    pub fn new(describe_first: bool) -> Self {
        SymbolicReasoner { describe_first }
    }

    /// The next line for `question` given the reader's answers so far.
    pub fn next_line(&self, question: &str, answers: &[ReaderAnswer]) -> String {
        let description = match answers.first() {
            Some(ReaderAnswer::Description { series, x_labels }) if self.describe_first => {
                Some((series.as_slice(), x_labels.as_slice()))
            }
            _ => None,
        };
        let opts = DecomposeOptions {
            no_describe: !self.describe_first,
            description,
        };
        let plan = match decompose(question, None, &opts) {
            Ok(p) => p,
            Err(e) => {
                log::debug!("symbolic reasoner gives up: {e}");
                return UNKNOWN_CONCLUSION.to_string();
            }
        };
        match plan.queries.get(answers.len()) {
            Some(q) => format_query(q),
            None => deduce(&plan, &answers[..plan.queries.len()])
                .map(|d| d.conclusion)
                .unwrap_or_else(|_| UNKNOWN_CONCLUSION.to_string()),
        }
    }
}

impl ReasonerBackend for SymbolicReasoner {
    fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError> {
        let generation = split_generation(&request.prompt);
        let question = generation
            .question
            .ok_or_else(|| BackendError::Other("prompt has no \"Q: \" line".into()))?;
        let mut answers = Vec::new();
        for turn in &generation.turns {
            if let StepKind::Query(_) = parse_step(turn.line) {
                answers.push(parse_reader_answer(turn.reader_answer.unwrap_or_default()));
            }
        }
        Ok(format!("{}\n", self.next_line(question, &answers)))
    }
}
