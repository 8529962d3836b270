use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::{debug, info, warn};

use super::postprocess::parse_llm_output;
use super::prompt::{build_prompt, validate_fewshot, ChatRequest, FewShotExample};
use super::API_KEY_ENV;
use crate::corpus::{Dialogue, LabelSet, Taxonomy, TopicId};

/// Settings for the chat-completion client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClientConfig {
    /// Base URL; requests go to `{endpoint_url}/v1/chat/completions`.
    pub endpoint_url: String,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Upper bound on outstanding requests.
    pub max_in_flight: usize,
    pub retry_limit: u32,
    pub backoff_base_ms: u64,
    pub backoff_max_ms: u64,
    pub request_timeout_ms: u64,
    #[serde(skip)]
    pub api_key: Option<String>,
}

impl Default for ClientConfig {
    fn default() -> Self {
        ClientConfig {
            endpoint_url: "http://127.0.0.1:8000".into(),
            model: "mixtral-8x7b-instruct".into(),
            temperature: 0.0,
            max_tokens: 128,
            max_in_flight: 4,
            retry_limit: 3,
            backoff_base_ms: 500,
            backoff_max_ms: 30_000,
            request_timeout_ms: 120_000,
            api_key: None,
        }
    }
}

impl ClientConfig {
    pub fn validate(&self) -> Result<(), ClientError> {
        if self.endpoint_url.trim().is_empty() {
            return Err(ClientError::Config("endpoint_url is empty".into()));
        }
        if self.max_in_flight == 0 {
            return Err(ClientError::Config("max_in_flight must be >= 1".into()));
        }
        if self.request_timeout_ms == 0 {
            return Err(ClientError::Config("request_timeout_ms must be > 0".into()));
        }
        Ok(())
    }

    /// Fill `api_key` from the environment when it is set.
    pub fn with_env_api_key(mut self) -> Self {
        if let Ok(key) = std::env::var(API_KEY_ENV) {
            if !key.is_empty() {
                self.api_key = Some(key);
            }
        }
        self
    }

    /// Delay before retry number `retry` (0-based): `base * 2^retry`, capped.
    pub fn backoff(&self, retry: u32) -> Duration {
        let factor = 1u64.checked_shl(retry.min(32)).unwrap_or(u64::MAX);
        Duration::from_millis(
            self.backoff_base_ms
                .saturating_mul(factor)
                .min(self.backoff_max_ms),
        )
    }
}

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("invalid client configuration: {0}")]
    Config(String),
    #[error("endpoint {url} unreachable: {message}")]
    Unreachable { url: String, message: String },
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    Decode(String),
    #[error(transparent)]
    Input(#[from] crate::error::Error),
}

impl ClientError {
    pub fn is_retryable(&self) -> bool {
        match self {
            ClientError::Status { status, .. } => *status == 429 || *status >= 500,
            ClientError::Transport(_) => true,
            _ => false,
        }
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ResponseMessage,
}

#[derive(Deserialize)]
struct ResponseMessage {
    content: Option<String>,
}

/// Thin chat-completion client with retry and exponential backoff.
#[derive(Debug, Clone)]
pub struct ChatClient {
    http: reqwest::Client,
    cfg: ClientConfig,
}

impl ChatClient {
    pub fn new(cfg: ClientConfig) -> Result<Self, ClientError> {
        cfg.validate()?;
        let http = reqwest::Client::builder()
            .timeout(Duration::from_millis(cfg.request_timeout_ms))
            .build()
            .map_err(|e| ClientError::Config(e.to_string()))?;
        Ok(ChatClient { http, cfg })
    }

    pub fn config(&self) -> &ClientConfig {
        &self.cfg
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.cfg.endpoint_url.trim_end_matches('/'), path)
    }

    /// Check that something answers HTTP at the endpoint. Any status counts.
    pub async fn probe(&self) -> Result<(), ClientError> {
        self.http
            .get(self.url("/"))
            .send()
            .await
            .map(|_| ())
            .map_err(|e| ClientError::Unreachable {
                url: self.cfg.endpoint_url.clone(),
                message: e.to_string(),
            })
    }

    async fn send_once(&self, request: &ChatRequest) -> Result<String, ClientError> {
        let mut builder = self.http.post(self.url("/v1/chat/completions")).json(request);
        if let Some(key) = &self.cfg.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder
            .send()
            .await
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        let status = response.status();
        let body = response
            .text()
            .await
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(ClientError::Status {
                status: status.as_u16(),
                body: body.chars().take(200).collect(),
            });
        }
        let parsed: ChatResponse =
            serde_json::from_str(&body).map_err(|e| ClientError::Decode(e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content.unwrap_or_default())
            .ok_or_else(|| ClientError::Decode("no choices".into()))
    }

    /// Send a request, retrying transient failures. Returns the outcome and
    /// the number of retries spent.
    pub async fn complete(&self, request: &ChatRequest) -> (Result<String, ClientError>, u32) {
        let mut retries = 0;
        loop {
            match self.send_once(request).await {
                Ok(content) => return (Ok(content), retries),
                Err(err) if err.is_retryable() && retries < self.cfg.retry_limit => {
                    let delay = self.cfg.backoff(retries);
                    debug!(retries, delay_ms = delay.as_millis() as u64, error = %err, "retrying");
                    tokio::time::sleep(delay).await;
                    retries += 1;
                }
                Err(err) => return (Err(err), retries),
            }
        }
    }
}

/// Teacher annotation of one dialogue.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticAnnotation {
    pub dialogue_id: String,
    #[serde(rename = "labels")]
    pub topics: BTreeSet<TopicId>,
    pub raw_response: String,
    pub dropped_unknown: usize,
    pub used_fallback: bool,
    pub parsed_ok: bool,
    pub stripped_prose: bool,
    pub retries: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SyntheticAnnotation {
    pub fn label_set(&self) -> LabelSet {
        LabelSet {
            dialogue_id: self.dialogue_id.clone(),
            topics: self.topics.clone(),
        }
    }

    fn failed(dialogue_id: &str, retries: u32, error: String) -> Self {
        SyntheticAnnotation {
            dialogue_id: dialogue_id.to_string(),
            topics: BTreeSet::from([TopicId::Other]),
            raw_response: String::new(),
            dropped_unknown: 0,
            used_fallback: true,
            parsed_ok: false,
            stripped_prose: false,
            retries,
            error: Some(error),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchStats {
    pub total: usize,
    pub failed: usize,
    pub fallbacks: usize,
    pub dropped_unknown: usize,
    pub retries: u64,
}

impl BatchStats {
    pub fn from_annotations(annotations: &[SyntheticAnnotation]) -> Self {
        let mut s = BatchStats {
            total: annotations.len(),
            ..Default::default()
        };
        for a in annotations {
            s.failed += usize::from(a.error.is_some());
            s.fallbacks += usize::from(a.used_fallback);
            s.dropped_unknown += a.dropped_unknown;
            s.retries += u64::from(a.retries);
        }
        s
    }
}

/// Annotate dialogues with at most `max_in_flight` requests outstanding.
///
/// Results come back in input order. A dialogue whose request fails after
/// all retries gets the fallback label with the error recorded; only an
/// unreachable endpoint at startup aborts the batch.
pub async fn annotate_batch(
    dialogues: &[Dialogue],
    taxonomy: &Taxonomy,
    fewshot: &[FewShotExample],
    cfg: &ClientConfig,
) -> Result<(Vec<SyntheticAnnotation>, BatchStats), ClientError> {
    validate_fewshot(fewshot)?;
    let client = ChatClient::new(cfg.clone())?;
    client.probe().await?;

    let total = dialogues.len();
    let done = AtomicUsize::new(0);
    let progress_every = (total / 20).max(1);

    let annotations: Vec<SyntheticAnnotation> = stream::iter(dialogues)
        .map(|d| {
            let client = &client;
            let done = &done;
            async move {
                let out = match build_prompt(
                    &d.text,
                    taxonomy,
                    fewshot,
                    &cfg.model,
                    cfg.temperature,
                    cfg.max_tokens,
                ) {
                    Err(e) => SyntheticAnnotation::failed(&d.dialogue_id, 0, e.to_string()),
                    Ok(request) => match client.complete(&request).await {
                        (Ok(raw), retries) => {
                            let parsed = parse_llm_output(&raw, taxonomy);
                            SyntheticAnnotation {
                                dialogue_id: d.dialogue_id.clone(),
                                topics: parsed.topics,
                                raw_response: raw,
                                dropped_unknown: parsed.stats.dropped_unknown,
                                used_fallback: parsed.stats.used_fallback,
                                parsed_ok: parsed.stats.parsed_ok,
                                stripped_prose: parsed.stats.stripped_prose,
                                retries,
                                error: None,
                            }
                        }
                        (Err(e), retries) => {
                            warn!(dialogue_id = %d.dialogue_id, retries, error = %e, "annotation failed");
                            SyntheticAnnotation::failed(&d.dialogue_id, retries, e.to_string())
                        }
                    },
                };
                let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                if n.is_multiple_of(progress_every) || n == total {
                    info!(done = n, total, "annotation progress");
                }
                out
            }
        })
        .buffered(cfg.max_in_flight)
        .collect()
        .await;

    let stats = BatchStats::from_annotations(&annotations);
    info!(
        total = stats.total,
        failed = stats.failed,
        fallbacks = stats.fallbacks,
        dropped_unknown = stats.dropped_unknown,
        retries = stats.retries,
        "annotation batch finished"
    );
    Ok((annotations, stats))
}
