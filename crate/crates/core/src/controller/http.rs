//! JSON-over-HTTP reasoner and reader clients.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};

use super::{BackendError, CompletionRequest, ReaderBackend, ReasonerBackend};

pub const API_KEY_ENV: &str = "CHARTLOOP_API_KEY";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HttpConfig {
    pub url: String,
    #[serde(default)]
    pub model: Option<String>,
    /// Falls back to the CHARTLOOP_API_KEY environment variable.
    #[serde(default, skip_serializing)]
    pub api_key: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub retries: u32,
}

fn default_timeout() -> u64 {
    60
}

fn default_retries() -> u32 {
    1
}

impl HttpConfig {
    pub fn new(url: impl Into<String>) -> Self {
        HttpConfig {
            url: url.into(),
            model: None,
            api_key: None,
            timeout_secs: default_timeout(),
            retries: default_retries(),
        }
    }
}

struct Client {
    agent: ureq::Agent,
    config: HttpConfig,
    api_key: Option<String>,
}

impl Client {
    fn new(config: HttpConfig) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build();
        let api_key = config
            .api_key
            .clone()
            .or_else(|| std::env::var(API_KEY_ENV).ok())
            .filter(|k| !k.is_empty());
        Client { agent, config, api_key }
    }

    fn post(&self, body: &Json) -> Result<Json, BackendError> {
        let mut last = BackendError::Transport("no attempt made".into());
        for attempt in 0..=self.config.retries {
            if attempt > 0 {
                log::info!("retrying {} ({last})", self.config.url);
            }
            let mut req = self.agent.post(&self.config.url);
            if let Some(k) = &self.api_key {
                req = req.set("Authorization", &format!("Bearer {k}"));
            }
            match req.send_json(body.clone()) {
                Ok(resp) => {
                    return resp
                        .into_json::<Json>()
                        .map_err(|e| BackendError::Response(e.to_string()))
                }
                Err(ureq::Error::Status(code, resp)) => {
                    let text = resp.into_string().unwrap_or_default();
                    last = BackendError::Response(format!("HTTP {code}: {text}"));
                    if code < 500 {
                        return Err(last);
                    }
                }
                Err(e) => last = BackendError::Transport(e.to_string()),
            }
        }
        Err(last)
    }
}

/// Completion endpoint client. Accepts `{"text"}`, `{"content"}` or
/// `{"choices":[{"text"}]}` responses.
pub struct HttpReasoner {
    client: Client,
}

impl HttpReasoner {
    pub fn new(config: HttpConfig) -> Self {
        HttpReasoner {
            client: Client::new(config),
        }
    }
}

fn completion_text(body: &Json) -> Option<&str> {
    body.get("text")
        .or_else(|| body.get("content"))
        .or_else(|| body.pointer("/choices/0/text"))
        .or_else(|| body.pointer("/choices/0/message/content"))
        .and_then(Json::as_str)
}

impl ReasonerBackend for HttpReasoner {
    fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError> {
        let mut body = json!({
            "prompt": request.prompt,
            "stop": request.stop,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        });
        if let Some(m) = &self.client.config.model {
            body["model"] = json!(m);
        }
        if let Some(s) = request.seed {
            body["seed"] = json!(s);
        }
        let resp = self.client.post(&body)?;
        completion_text(&resp)
            .map(str::to_string)
            .ok_or_else(|| BackendError::Response(format!("no completion text in {resp}")))
    }
}

/// Reader endpoint client: posts `{"chart_ref", "query"}`, expects `{"text"}`.
pub struct HttpReader {
    client: Client,
}

impl HttpReader {
    pub fn new(config: HttpConfig) -> Self {
        HttpReader {
            client: Client::new(config),
        }
    }
}

impl ReaderBackend for HttpReader {
    fn read(&self, chart_ref: &str, query: &str) -> Result<String, BackendError> {
        let resp = self.client.post(&json!({ "chart_ref": chart_ref, "query": query }))?;
        completion_text(&resp)
            .map(str::to_string)
            .ok_or_else(|| BackendError::Response(format!("no text in {resp}")))
    }
}
