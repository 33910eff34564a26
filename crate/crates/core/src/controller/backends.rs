use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use super::prompt::split_generation;
use super::{BackendError, CompletionRequest, ReaderBackend, ReasonerBackend};
use crate::oracle::{answer_query, TableOracle};

/// The table oracle as a reader. Unknown charts are a read failure.
#[derive(Clone, Debug)]
pub struct OracleReader {
    oracle: Arc<TableOracle>,
}

impl OracleReader {
    pub fn new(oracle: Arc<TableOracle>) -> Self {
        OracleReader { oracle }
    }
}

impl ReaderBackend for OracleReader {
    fn read(&self, chart_ref: &str, query: &str) -> Result<String, BackendError> {
        let table = self
            .oracle
            .chart(chart_ref)
            .map_err(|e| BackendError::Other(e.to_string()))?;
        Ok(answer_query(table, query))
    }

    fn linearize(&self, chart_ref: &str) -> Option<String> {
        self.oracle.chart(chart_ref).ok().map(|t| t.linearize())
    }
}

/// Replays fixed lines: the n-th reasoner line of the current answer is
/// `lines[n]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScriptedReasoner {
    lines: Vec<String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScriptFile {
    List(Vec<String>),
    Map(BTreeMap<String, String>),
}

impl ScriptedReasoner {
    pub fn new(lines: Vec<String>) -> Self {
        ScriptedReasoner { lines }
    }

    /// Accepts a JSON list of lines or an object mapping step index to line.
    pub fn from_json(text: &str) -> Result<Self, BackendError> {
        let file: ScriptFile =
            serde_json::from_str(text).map_err(|e| BackendError::Other(format!("script: {e}")))?;
        let lines = match file {
            ScriptFile::List(v) => v,
            ScriptFile::Map(m) => {
                let mut indexed = m
                    .into_iter()
                    .map(|(k, v)| {
                        k.parse::<usize>()
                            .map(|i| (i, v))
                            .map_err(|_| BackendError::Other(format!("script: step key {k:?} is not an index")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                indexed.sort_by_key(|(i, _)| *i);
                for (expected, (i, _)) in indexed.iter().enumerate() {
                    if *i != expected {
                        return Err(BackendError::Other(format!("script: missing step {expected}")));
                    }
                }
                indexed.into_iter().map(|(_, v)| v).collect()
            }
        };
        Ok(ScriptedReasoner { lines })
    }

    pub fn from_path(path: &Path) -> Result<Self, BackendError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BackendError::Other(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn lines(&self) -> &[String] {
        &self.lines
    }
}

impl ReasonerBackend for ScriptedReasoner {
    fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError> {
        let step = split_generation(&request.prompt).turns.len();
        self.lines
            .get(step)
            .map(|l| format!("{l}\n"))
            .ok_or_else(|| BackendError::Other(format!("script exhausted at step {step}")))
    }
}

/// Cuts a backend's output at the first stop marker, for servers that
/// ignore the `stop` field.
#[derive(Clone, Debug)]
pub struct StopTruncating<B> {
    inner: B,
}

impl<B> StopTruncating<B> {
    pub fn new(inner: B) -> Self {
        StopTruncating { inner }
    }
}

impl<B: ReasonerBackend> ReasonerBackend for StopTruncating<B> {
    fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError> {
        let mut out = self.inner.complete(request)?;
        let cut = request
            .stop
            .iter()
            .filter(|m| !m.is_empty())
            .filter_map(|m| out.find(m.as_str()))
            .min();
        if let Some(i) = cut {
            out.truncate(i);
        }
        Ok(out)
    }
}
