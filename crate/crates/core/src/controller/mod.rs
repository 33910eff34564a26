//! The interleaved loop: the reasoner writes one line at a time, query lines
//! go to the reader, and the reader's sentence is spliced back into the
//! reasoner's context before it continues.

mod backends;
mod http;
mod prompt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{is_no_answer, majority_vote, normalize_value};
use crate::model::{ReasoningTrace, Step, StepRole, Termination, Value};
use crate::protocol::{parse_step, StepKind, NOT_AVAILABLE};

pub use backends::{OracleReader, ScriptedReasoner, StopTruncating};
pub use http::{HttpConfig, HttpReader, HttpReasoner};
pub use prompt::{
    build_prompt, shipped_template, split_generation, Exemplar, Generation, PromptError, PromptStyle,
    PromptTemplate, Turn,
};

pub const LINE_STOP: &str = "\n";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("bad response: {0}")]
    Response(String),
    #[error("{0}")]
    Other(String),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub stop: Vec<String>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub seed: Option<u64>,
}

/// A text-completion model. The continuation excludes the prompt and ends
/// at or before the first stop marker.
pub trait ReasonerBackend: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError>;
}

pub trait ReaderBackend: Send + Sync {
    fn read(&self, chart_ref: &str, query: &str) -> Result<String, BackendError>;

    /// The chart as a linearized table, for table-in-prompt styles.
    fn linearize(&self, _chart_ref: &str) -> Option<String> {
        None
    }
}

impl<T: ReasonerBackend + ?Sized> ReasonerBackend for &T {
    fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError> {
        (**self).complete(request)
    }
}

impl<T: ReaderBackend + ?Sized> ReaderBackend for &T {
    fn read(&self, chart_ref: &str, query: &str) -> Result<String, BackendError> {
        (**self).read(chart_ref, query)
    }

    fn linearize(&self, chart_ref: &str) -> Option<String> {
        (**self).linearize(chart_ref)
    }
}

impl<T: ReasonerBackend + ?Sized> ReasonerBackend for Box<T> {
    fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError> {
        (**self).complete(request)
    }
}

impl<T: ReaderBackend + ?Sized> ReaderBackend for Box<T> {
    fn read(&self, chart_ref: &str, query: &str) -> Result<String, BackendError> {
        (**self).read(chart_ref, query)
    }

    fn linearize(&self, chart_ref: &str) -> Option<String> {
        (**self).linearize(chart_ref)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub max_steps: usize,
    pub describe_first: bool,
    pub temperature: f64,
    pub max_tokens_per_segment: u32,
    pub prompt_style: PromptStyle,
    pub seed: Option<u64>,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            max_steps: 8,
            describe_first: true,
            temperature: 0.0,
            max_tokens_per_segment: 256,
            prompt_style: PromptStyle::Domino5Shot,
            seed: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfConsistencyConfig {
    pub n_samples: usize,
    pub temperature: f64,
}

impl Default for SelfConsistencyConfig {
    fn default() -> Self {
        SelfConsistencyConfig {
            n_samples: 5,
            temperature: 0.4,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EpisodeError {
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("max_steps must be at least 1")]
    NoSteps,
    #[error("self-consistency needs at least one sample")]
    NoSamples,
}

/// The prompt an episode starts from under `config`.
pub fn episode_prompt(
    question: &str,
    chart_ref: &str,
    reader: &dyn ReaderBackend,
    config: &EpisodeConfig,
) -> Result<String, PromptError> {
    let mut template = shipped_template(config.prompt_style);
    if !config.describe_first {
        template = template.without_describe();
    }
    let context = if config.prompt_style.needs_context() {
        reader.linearize(chart_ref)
    } else {
        None
    };
    build_prompt(config.prompt_style, &template, question, context.as_deref())
}

/// One interleaved episode. Transport failures end the episode with a
/// partial trace; a failed read splices the not-available sentence.
pub fn run_episode(
    question: &str,
    chart_ref: &str,
    reasoner: &dyn ReasonerBackend,
    reader: &dyn ReaderBackend,
    config: &EpisodeConfig,
) -> Result<ReasoningTrace, EpisodeError> {
    if config.max_steps == 0 {
        return Err(EpisodeError::NoSteps);
    }
    let mut context = episode_prompt(question, chart_ref, reader, config)?;
    let mut steps = Vec::new();
    let finish = |steps, final_answer, terminated_by| ReasoningTrace {
        steps,
        final_answer,
        terminated_by,
    };
    for _ in 0..config.max_steps {
        let request = CompletionRequest {
            prompt: context.clone(),
            stop: vec![LINE_STOP.to_string()],
            temperature: config.temperature,
            max_tokens: config.max_tokens_per_segment,
            seed: config.seed,
        };
        let output = match reasoner.complete(&request) {
            Ok(o) => o,
            Err(e) => {
                log::warn!("reasoner failed: {e}");
                return Ok(finish(steps, None, Termination::BackendError));
            }
        };
        let line = output.split(LINE_STOP).next().unwrap_or_default().trim();
        match parse_step(line) {
            StepKind::Query(_) => {
                let answer = match reader.read(chart_ref, line) {
                    Ok(a) => single_line(&a),
                    Err(e) => {
                        log::warn!("reader failed on {line:?}: {e}");
                        NOT_AVAILABLE.to_string()
                    }
                };
                context.push_str(line);
                context.push('\n');
                context.push_str(&answer);
                context.push('\n');
                steps.push(Step {
                    role: StepRole::ReasonerQuery,
                    text: line.to_string(),
                });
                steps.push(Step {
                    role: StepRole::ReaderAnswer,
                    text: answer,
                });
            }
            StepKind::Conclusion { answer, text } => {
                steps.push(Step {
                    role: StepRole::Conclusion,
                    text,
                });
                return Ok(finish(steps, Some(answer), Termination::Conclusion));
            }
            StepKind::Other(text) => {
                let unparseable_conclusion = text.contains("answer is");
                context.push_str(&text);
                context.push('\n');
                if !text.is_empty() {
                    steps.push(Step {
                        role: StepRole::ProtocolError,
                        text,
                    });
                }
                if unparseable_conclusion {
                    return Ok(finish(steps, None, Termination::ParseError));
                }
            }
        }
    }
    Ok(finish(steps, None, Termination::MaxSteps))
}

fn single_line(s: &str) -> String {
    s.trim().replace(['\r', '\n'], " ")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfConsistencyOutcome {
    /// `None` when no episode produced a usable answer.
    pub winner: Option<Value>,
    pub traces: Vec<ReasoningTrace>,
}

/// Runs `sc.n_samples` episodes (seeds `seed`, `seed+1`, ...) at the sampling
/// temperature and votes over their normalized final answers.
pub fn run_self_consistency(
    question: &str,
    chart_ref: &str,
    reasoner: &dyn ReasonerBackend,
    reader: &dyn ReaderBackend,
    config: &EpisodeConfig,
    sc: &SelfConsistencyConfig,
) -> Result<SelfConsistencyOutcome, EpisodeError> {
    if sc.n_samples == 0 {
        return Err(EpisodeError::NoSamples);
    }
    let base = config.seed.unwrap_or(0);
    let traces = (0..sc.n_samples)
        .into_par_iter()
        .map(|i| {
            let cfg = EpisodeConfig {
                temperature: sc.temperature,
                seed: Some(base.wrapping_add(i as u64)),
                ..config.clone()
            };
            run_episode(question, chart_ref, reasoner, reader, &cfg)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let finals: Vec<Value> = traces
        .iter()
        .filter_map(|t| t.final_answer.as_ref())
        .map(normalize_value)
        .filter(|v| !is_no_answer(v))
        .collect();
    Ok(SelfConsistencyOutcome {
        winner: majority_vote(&finals).ok(),
        traces,
    })
}

/// One question's run output, as written by `run` and read by the exporters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub chart_id: String,
    pub question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template_type: Option<crate::model::TemplateType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<Value>,
    /// Voted answer across `traces`.
    #[serde(rename = "final")]
    pub final_answer: Option<Value>,
    pub traces: Vec<ReasoningTrace>,
}
