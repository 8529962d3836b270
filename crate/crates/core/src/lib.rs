//! Topic labeling, soft-label evaluation and gender speaking-time analytics
//! for broadcast news transcripts.
//!
//! Stages: [`ingest`] parses transcripts, gender segmentations, annotations
//! and channel metadata; [`assembler`] groups utterances into dialogues;
//! [`annotator`] labels dialogues through a chat-completion endpoint or a
//! batch classifier; [`metrics`] scores predictions against double-annotated
//! gold; [`analytics`] attributes speaking time to topics; [`report`] writes
//! the tables.

pub mod analytics;
pub mod annotator;
pub mod assembler;
pub mod corpus;
mod error;
pub mod ingest;
pub mod jsonl;
pub mod metrics;
pub mod report;

pub use error::{Error, Result};
