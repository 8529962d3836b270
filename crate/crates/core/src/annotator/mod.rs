//! Few-shot LLM topic annotation: prompt construction, the chat-completion
//! client, output post-processing and export of the synthetic training set.

mod classify;
mod client;
mod export;
pub mod mock;
mod postprocess;
mod prompt;

pub use classify::{ClassifyClient, ClassifyConfig};
pub use client::{annotate_batch, BatchStats, ChatClient, ClientConfig, ClientError, SyntheticAnnotation};
pub use export::{export_training_set, parse_training_set, TrainingRecord};
pub use postprocess::{parse_llm_output, ParsedLabels, PostProcessStats};
pub use prompt::{
    build_prompt, load_fewshot, ChatMessage, ChatRequest, FewShotExample, Role, FEWSHOT_COUNT,
};

/// Environment variable holding the bearer token for inference endpoints.
pub const API_KEY_ENV: &str = "NEWSGAUGE_API_KEY";
