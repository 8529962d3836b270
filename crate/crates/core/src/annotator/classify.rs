use std::collections::BTreeSet;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;
use tracing::warn;

use super::client::ClientError;
use crate::corpus::{Dialogue, LabelSet, Taxonomy, TopicId};

/// Settings for a classification service speaking `POST /classify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifyConfig {
    pub endpoint_url: String,
    pub batch_size: usize,
    pub request_timeout_ms: u64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            endpoint_url: "http://127.0.0.1:8080".into(),
            batch_size: 32,
            request_timeout_ms: 120_000,
        }
    }
}

#[derive(Deserialize)]
struct HealthResponse {
    status: String,
    taxonomy_fingerprint: Option<String>,
}

#[derive(Deserialize)]
struct ClassifyResponse {
    labels: Vec<Vec<String>>,
}

/// Client for a batch text classifier (e.g. a distilled student model).
#[derive(Debug, Clone)]
pub struct ClassifyClient {
    http: reqwest::Client,
    cfg: ClassifyConfig,
}

impl ClassifyClient {
    pub fn new(cfg: ClassifyConfig) -> Result<Self, ClientError> {
        if cfg.batch_size == 0 {
            return Err(ClientError::Config("batch_size must be >= 1".into()));
        }
        let http = reqwest::Client::builder()
            .timeout(Duration::from_millis(cfg.request_timeout_ms))
            .build()
            .map_err(|e| ClientError::Config(e.to_string()))?;
        Ok(ClassifyClient { http, cfg })
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.cfg.endpoint_url.trim_end_matches('/'), path)
    }

    /// `GET /health`; fails when the service reports a different taxonomy.
    pub async fn check_health(&self, taxonomy: &Taxonomy) -> Result<(), ClientError> {
        let resp = self
            .http
            .get(self.url("/health"))
            .send()
            .await
            .map_err(|e| ClientError::Unreachable {
                url: self.cfg.endpoint_url.clone(),
                message: e.to_string(),
            })?;
        let health: HealthResponse = resp
            .json()
            .await
            .map_err(|e| ClientError::Decode(e.to_string()))?;
        if health.status != "ok" {
            return Err(ClientError::Decode(format!("service status `{}`", health.status)));
        }
        match health.taxonomy_fingerprint {
            Some(fp) if fp != taxonomy.fingerprint() => Err(ClientError::Config(format!(
                "taxonomy fingerprint mismatch: service {fp}, local {}",
                taxonomy.fingerprint()
            ))),
            Some(_) => Ok(()),
            None => {
                warn!("classification service did not report a taxonomy fingerprint");
                Ok(())
            }
        }
    }

    async fn classify_texts(&self, texts: &[&str]) -> Result<Vec<Vec<String>>, ClientError> {
        let resp = self
            .http
            .post(self.url("/classify"))
            .json(&json!({ "texts": texts }))
            .send()
            .await
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            let body = resp.text().await.unwrap_or_default();
            return Err(ClientError::Status {
                status: status.as_u16(),
                body,
            });
        }
        let parsed: ClassifyResponse = resp
            .json()
            .await
            .map_err(|e| ClientError::Decode(e.to_string()))?;
        if parsed.labels.len() != texts.len() {
            return Err(ClientError::Decode(format!(
                "{} label lists for {} texts",
                parsed.labels.len(),
                texts.len()
            )));
        }
        Ok(parsed.labels)
    }

    /// Classify dialogues in batches. Labels outside the taxonomy are dropped
    /// and an empty result becomes `other`.
    pub async fn classify_dialogues(
        &self,
        dialogues: &[Dialogue],
        taxonomy: &Taxonomy,
    ) -> Result<Vec<LabelSet>, ClientError> {
        let mut out = Vec::with_capacity(dialogues.len());
        for chunk in dialogues.chunks(self.cfg.batch_size) {
            let texts: Vec<&str> = chunk.iter().map(|d| d.text.as_str()).collect();
            let labels = self.classify_texts(&texts).await?;
            for (d, raw) in chunk.iter().zip(labels) {
                let mut topics: BTreeSet<TopicId> = raw
                    .iter()
                    .filter_map(|l| taxonomy.canonical_topic(l).map(|t| t.id))
                    .collect();
                if topics.is_empty() {
                    topics.insert(TopicId::Other);
                }
                out.push(LabelSet {
                    dialogue_id: d.dialogue_id.clone(),
                    topics,
                });
            }
        }
        Ok(out)
    }
}
