use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::{Taxonomy, TopicId};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostProcessStats {
    /// A JSON array of strings was found in the response.
    pub parsed_ok: bool,
    pub dropped_unknown: usize,
    /// Text other than the array (and code fences) was discarded.
    pub stripped_prose: bool,
    pub used_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedLabels {
    pub topics: BTreeSet<TopicId>,
    pub stats: PostProcessStats,
}

/// Locate the first well-formed JSON array of strings in `raw`.
/// Returns the array and its byte range.
fn first_string_array(raw: &str) -> Option<(Vec<String>, usize, usize)> {
    for (start, _) in raw.match_indices('[') {
        let mut stream =
            serde_json::Deserializer::from_str(&raw[start..]).into_iter::<Vec<String>>();
        if let Some(Ok(items)) = stream.next() {
            return Some((items, start, start + stream.byte_offset()));
        }
    }
    None
}

fn has_prose(outside: &str) -> bool {
    let cleaned = outside
        .replace("```json", "")
        .replace("```JSON", "")
        .replace("```", "");
    !cleaned.trim().is_empty()
}

/// Turn a raw model response into a canonical, non-empty label set.
///
/// Takes the first JSON string array in the text (fenced or not), maps each
/// element through the taxonomy, drops unknown names and falls back to
/// `other` when nothing usable remains.
pub fn parse_llm_output(raw: &str, taxonomy: &Taxonomy) -> ParsedLabels {
    let mut stats = PostProcessStats::default();
    let mut topics = BTreeSet::new();

    if let Some((items, start, end)) = first_string_array(raw) {
        stats.parsed_ok = true;
        stats.stripped_prose = has_prose(&raw[..start]) || has_prose(&raw[end..]);
        for item in items {
            match taxonomy.canonical_topic(&item) {
                Some(topic) => {
                    topics.insert(topic.id);
                }
                None => stats.dropped_unknown += 1,
            }
        }
    }

    if topics.is_empty() {
        topics.insert(TopicId::Other);
        stats.used_fallback = true;
    }
    ParsedLabels { topics, stats }
}
