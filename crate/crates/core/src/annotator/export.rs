use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::client::SyntheticAnnotation;
use crate::corpus::{Dialogue, TopicId};
use crate::error::{Error, Result};

/// One line of the distillation training set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub dialogue_id: String,
    pub text: String,
    pub labels: BTreeSet<TopicId>,
}

/// Write teacher annotations as JSONL `{dialogue_id, text, labels}` lines,
/// ordered by dialogue id.
pub fn export_training_set(
    annotations: &[SyntheticAnnotation],
    dialogues: &[Dialogue],
) -> Result<Vec<u8>> {
    if annotations.is_empty() {
        return Err(Error::EmptyInput("no annotations to export"));
    }
    let texts: HashMap<&str, &str> = dialogues
        .iter()
        .map(|d| (d.dialogue_id.as_str(), d.text.as_str()))
        .collect();
    let mut records = annotations
        .iter()
        .map(|a| {
            let text = texts
                .get(a.dialogue_id.as_str())
                .ok_or_else(|| Error::MissingDialogue(a.dialogue_id.clone()))?;
            Ok(TrainingRecord {
                dialogue_id: a.dialogue_id.clone(),
                text: text.to_string(),
                labels: a.topics.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    records.sort_by(|a, b| a.dialogue_id.cmp(&b.dialogue_id));
    crate::jsonl::write_lines(&records)
}

pub fn parse_training_set(bytes: &[u8]) -> Result<Vec<TrainingRecord>> {
    crate::jsonl::parse_lines(bytes, "training set")
}
