use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{Taxonomy, TopicId, TOPIC_COUNT};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Local,
    National,
    European,
    International,
}

impl Scope {
    fn parse(raw: &str) -> Option<Self> {
        match raw.trim().to_ascii_lowercase().as_str() {
            "local" => Some(Scope::Local),
            "national" => Some(Scope::National),
            "european" | "europeen" | "européen" => Some(Scope::European),
            "international" => Some(Scope::International),
            _ => None,
        }
    }
}

/// One annotator's judgement of one dialogue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanAnnotation {
    pub dialogue_id: String,
    pub annotator_id: String,
    pub topics: BTreeSet<TopicId>,
    pub scope: Scope,
    pub flag_ukraine: bool,
    pub flag_israel_hamas: bool,
    pub flag_mixed_subjects: bool,
}

/// Column names of the annotation table. The defaults match the native
/// layout; other exports (such as the public release of the annotated
/// corpus) are read by overriding the names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnnotationColumns {
    pub dialogue_id: String,
    pub annotator_id: String,
    pub topics: String,
    pub scope: String,
    pub flag_ukraine: String,
    pub flag_israel_hamas: String,
    pub flag_mixed: String,
    pub topic_separator: char,
}

impl Default for AnnotationColumns {
    fn default() -> Self {
        AnnotationColumns {
            dialogue_id: "dialogue_id".into(),
            annotator_id: "annotator_id".into(),
            topics: "topics".into(),
            scope: "scope".into(),
            flag_ukraine: "flag_ukraine".into(),
            flag_israel_hamas: "flag_israel_hamas".into(),
            flag_mixed: "flag_mixed".into(),
            topic_separator: ';',
        }
    }
}

const SOURCE: &str = "annotations";

fn row_error(row: u64, message: String) -> Error {
    Error::Row {
        source_name: SOURCE.into(),
        row,
        message,
    }
}

fn parse_flag(raw: &str, name: &str, row: u64) -> Result<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "0" | "false" | "" => Ok(false),
        "1" | "true" => Ok(true),
        other => Err(row_error(row, format!("invalid {name} value `{other}`"))),
    }
}

/// Load human annotations; every topic must resolve through the taxonomy.
pub fn load_annotations(
    bytes: &[u8],
    taxonomy: &Taxonomy,
    columns: &AnnotationColumns,
) -> Result<Vec<HumanAnnotation>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let headers = reader
        .headers()
        .map_err(|e| row_error(1, e.to_string()))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| row_error(1, format!("missing column `{name}`")))
    };
    let c_dialogue = col(&columns.dialogue_id)?;
    let c_annotator = col(&columns.annotator_id)?;
    let c_topics = col(&columns.topics)?;
    let c_scope = col(&columns.scope)?;
    let c_ukraine = col(&columns.flag_ukraine)?;
    let c_israel = col(&columns.flag_israel_hamas)?;
    let c_mixed = col(&columns.flag_mixed)?;

    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            row_error(e.position().map(|p| p.line()).unwrap_or(0), e.to_string())
        })?;
        let row = record.position().map(|p| p.line()).unwrap_or(0);
        let get = |i: usize| record.get(i).unwrap_or("");

        let dialogue_id = get(c_dialogue).to_string();
        if dialogue_id.is_empty() {
            return Err(row_error(row, "empty dialogue_id".into()));
        }
        let mut topics = BTreeSet::new();
        for raw in get(c_topics).split(columns.topic_separator) {
            let raw = raw.trim();
            if raw.is_empty() {
                continue;
            }
            let topic = taxonomy
                .canonical_topic(raw)
                .ok_or_else(|| Error::UnknownTopic {
                    dialogue_id: dialogue_id.clone(),
                    value: raw.to_string(),
                })?;
            topics.insert(topic.id);
        }
        if topics.is_empty() {
            return Err(row_error(row, format!("dialogue {dialogue_id}: no topics")));
        }
        let raw_scope = get(c_scope);
        let scope = Scope::parse(raw_scope).ok_or_else(|| {
            row_error(
                row,
                format!("dialogue {dialogue_id}: missing or invalid scope `{raw_scope}`"),
            )
        })?;

        out.push(HumanAnnotation {
            dialogue_id,
            annotator_id: get(c_annotator).to_string(),
            topics,
            scope,
            flag_ukraine: parse_flag(get(c_ukraine), "flag_ukraine", row)?,
            flag_israel_hamas: parse_flag(get(c_israel), "flag_israel_hamas", row)?,
            flag_mixed_subjects: parse_flag(get(c_mixed), "flag_mixed", row)?,
        });
    }
    Ok(out)
}

/// Fraction of the two annotators who applied each topic to a dialogue.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldMass {
    pub dialogue_id: String,
    mass: [f64; TOPIC_COUNT],
}

impl GoldMass {
    /// Build directly from per-topic positive counts (0, 1 or 2).
    pub fn from_counts(dialogue_id: impl Into<String>, counts: [u8; TOPIC_COUNT]) -> Self {
        let mut mass = [0.0; TOPIC_COUNT];
        for (m, c) in mass.iter_mut().zip(counts) {
            assert!(c <= 2, "at most two annotators per dialogue");
            *m = f64::from(c) / 2.0;
        }
        GoldMass {
            dialogue_id: dialogue_id.into(),
            mass,
        }
    }

    pub fn p(&self, topic: TopicId) -> f64 {
        self.mass[topic.index()]
    }

    pub fn masses(&self) -> &[f64; TOPIC_COUNT] {
        &self.mass
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }
}

/// Group annotations per dialogue, pairing exactly two annotators each.
/// Output is sorted by dialogue id.
pub fn pair_annotations(
    annotations: &[HumanAnnotation],
) -> Result<Vec<(&HumanAnnotation, &HumanAnnotation)>> {
    let mut by_dialogue: BTreeMap<&str, Vec<&HumanAnnotation>> = BTreeMap::new();
    for a in annotations {
        by_dialogue.entry(&a.dialogue_id).or_default().push(a);
    }
    by_dialogue
        .into_iter()
        .map(|(id, group)| match group.as_slice() {
            [a, b] if a.annotator_id != b.annotator_id || a.annotator_id.is_empty() => Ok((*a, *b)),
            [a, _] => Err(Error::Config(format!(
                "dialogue {id}: annotator `{}` appears twice",
                a.annotator_id
            ))),
            _ => Err(Error::AnnotatorCount {
                dialogue_id: id.to_string(),
                count: group.len(),
            }),
        })
        .collect()
}

/// Gold masses for every doubly-annotated dialogue, sorted by dialogue id.
pub fn build_gold(annotations: &[HumanAnnotation]) -> Result<Vec<GoldMass>> {
    Ok(pair_annotations(annotations)?
        .into_iter()
        .map(|(a, b)| {
            let mut counts = [0u8; TOPIC_COUNT];
            for t in a.topics.iter().chain(&b.topics) {
                counts[t.index()] += 1;
            }
            GoldMass::from_counts(a.dialogue_id.clone(), counts)
        })
        .collect())
}
