//! In-process mock inference server for tests and offline runs.
//!
//! Speaks the subset of the chat-completion protocol the client uses, plus the
//! `/classify` and `/health` routes of the student classifier protocol.
//! Responses are canned: the first rule whose `contains` string appears in
//! the target text (case-insensitive) decides the reply.

use std::collections::VecDeque;
use std::net::{SocketAddr, TcpListener};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::oneshot;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockRule {
    pub contains: String,
    pub response: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MockConfig {
    pub rules: Vec<MockRule>,
    pub default_response: String,
    /// Statuses served, in order, to the first chat requests before normal
    /// service starts (e.g. `[429, 429]`).
    pub script: Vec<u16>,
    /// When set, every chat request fails with this status.
    pub always_status: Option<u16>,
    /// Artificial latency per request.
    pub delay_ms: u64,
    pub taxonomy_fingerprint: Option<String>,
    /// Largest `/classify` batch accepted; larger ones get HTTP 413.
    pub max_batch: usize,
}

impl Default for MockConfig {
    fn default() -> Self {
        MockConfig {
            rules: Vec::new(),
            default_response: "[\"autre\"]".into(),
            script: Vec::new(),
            always_status: None,
            delay_ms: 0,
            taxonomy_fingerprint: None,
            max_batch: 256,
        }
    }
}

impl MockConfig {
    pub fn from_json(bytes: &[u8]) -> Result<Self, serde_json::Error> {
        serde_json::from_slice(bytes)
    }

    pub fn respond(&self, text: &str) -> &str {
        let lowered = text.to_lowercase();
        self.rules
            .iter()
            .find(|r| lowered.contains(&r.contains.to_lowercase()))
            .map(|r| r.response.as_str())
            .unwrap_or(&self.default_response)
    }
}

#[derive(Debug, Default)]
struct Counters {
    chat_requests: AtomicUsize,
    classify_requests: AtomicUsize,
    in_flight: AtomicUsize,
    max_in_flight: AtomicUsize,
    error_responses: AtomicUsize,
}

/// Counters observed by the server since start.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MockStats {
    pub chat_requests: usize,
    pub classify_requests: usize,
    pub max_in_flight: usize,
    pub error_responses: usize,
}

struct AppState {
    config: MockConfig,
    script: Mutex<VecDeque<u16>>,
    counters: Counters,
}

struct InFlightGuard<'a>(&'a Counters);

impl<'a> InFlightGuard<'a> {
    fn enter(c: &'a Counters) -> Self {
        let now = c.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        c.max_in_flight.fetch_max(now, Ordering::SeqCst);
        InFlightGuard(c)
    }
}

impl Drop for InFlightGuard<'_> {
    fn drop(&mut self) {
        self.0.in_flight.fetch_sub(1, Ordering::SeqCst);
    }
}

fn error_status(state: &AppState, status: u16) -> Response {
    state.counters.error_responses.fetch_add(1, Ordering::SeqCst);
    let code = StatusCode::from_u16(status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    (code, Json(json!({"error": {"message": "mock failure", "code": status}}))).into_response()
}

async fn chat(State(state): State<Arc<AppState>>, Json(body): Json<Value>) -> Response {
    let _guard = InFlightGuard::enter(&state.counters);
    state.counters.chat_requests.fetch_add(1, Ordering::SeqCst);
    if state.config.delay_ms > 0 {
        tokio::time::sleep(Duration::from_millis(state.config.delay_ms)).await;
    }
    if let Some(status) = state.config.always_status {
        return error_status(&state, status);
    }
    let scripted = state.script.lock().expect("script lock").pop_front();
    if let Some(status) = scripted {
        return error_status(&state, status);
    }

    let target = body["messages"]
        .as_array()
        .and_then(|msgs| msgs.iter().rev().find(|m| m["role"] == "user"))
        .and_then(|m| m["content"].as_str())
        .unwrap_or_default();
    let content = state.config.respond(target);
    Json(json!({
        "id": "mock",
        "object": "chat.completion",
        "model": body["model"],
        "choices": [{"index": 0, "message": {"role": "assistant", "content": content}, "finish_reason": "stop"}]
    }))
    .into_response()
}

#[derive(Deserialize)]
struct ClassifyBody {
    texts: Vec<String>,
}

async fn classify(State(state): State<Arc<AppState>>, Json(body): Json<ClassifyBody>) -> Response {
    let _guard = InFlightGuard::enter(&state.counters);
    state.counters.classify_requests.fetch_add(1, Ordering::SeqCst);
    if body.texts.len() > state.config.max_batch {
        return error_status(&state, 413);
    }
    let labels: Vec<Vec<String>> = body
        .texts
        .iter()
        .map(|t| serde_json::from_str(state.config.respond(t)).unwrap_or_default())
        .collect();
    Json(json!({ "labels": labels })).into_response()
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Value> {
    Json(json!({"status": "ok", "taxonomy_fingerprint": state.config.taxonomy_fingerprint}))
}

fn new_state(config: MockConfig) -> Arc<AppState> {
    Arc::new(AppState {
        script: Mutex::new(config.script.iter().copied().collect()),
        config,
        counters: Counters::default(),
    })
}

fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/", get(|| async { "mock inference server" }))
        .route("/health", get(health))
        .route("/v1/chat/completions", post(chat))
        .route("/classify", post(classify))
        .with_state(state)
}

fn stats_of(router_state: &Arc<AppState>) -> MockStats {
    let c = &router_state.counters;
    MockStats {
        chat_requests: c.chat_requests.load(Ordering::SeqCst),
        classify_requests: c.classify_requests.load(Ordering::SeqCst),
        max_in_flight: c.max_in_flight.load(Ordering::SeqCst),
        error_responses: c.error_responses.load(Ordering::SeqCst),
    }
}

/// A running mock server on its own thread. Shuts down on drop.
pub struct MockServer {
    addr: SocketAddr,
    state: Arc<AppState>,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl MockServer {
    /// Start on an ephemeral localhost port.
    pub fn spawn(config: MockConfig) -> std::io::Result<Self> {
        Self::spawn_on("127.0.0.1:0", config)
    }

    pub fn spawn_on(addr: &str, config: MockConfig) -> std::io::Result<Self> {
        let listener = TcpListener::bind(addr)?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let state = new_state(config);
        let app = router(state.clone());
        let (tx, rx) = oneshot::channel::<()>();
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()?;
        let thread = std::thread::spawn(move || {
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(listener).expect("listener");
                let _ = axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        let _ = rx.await;
                    })
                    .await;
            });
        });
        Ok(MockServer {
            addr,
            state,
            shutdown: Some(tx),
            thread: Some(thread),
        })
    }

    /// Serve until the process is killed.
    pub fn serve_forever(addr: &str, config: MockConfig) -> std::io::Result<()> {
        let server = Self::spawn_on(addr, config)?;
        tracing::info!(url = %server.url(), "mock server listening");
        loop {
            std::thread::park();
        }
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn stats(&self) -> MockStats {
        stats_of(&self.state)
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(thread) = self.thread.take() {
            let _ = thread.join();
        }
    }
}
