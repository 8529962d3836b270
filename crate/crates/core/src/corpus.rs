//! Domain types shared by every pipeline stage: the topic taxonomy, channels,
//! utterances, dialogues and label sets.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

pub const TOPIC_COUNT: usize = 18;

const DEFAULT_TAXONOMY: &str = include_str!("../data/taxonomy.json");

/// Canonical topic identifier. Declaration order is the canonical taxonomy
/// order used for every report table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopicId {
    ReligionBelief,
    ScienceTechnology,
    Education,
    DisasterAccident,
    Labour,
    Weather,
    Health,
    Other,
    EnvironmentalIssue,
    Sport,
    LifestyleLeisure,
    SocialIssue,
    EconomyBusinessFinance,
    Commercial,
    ArtsCultureEntertainment,
    CrimeLawJustice,
    Politics,
    UnrestConflictsWar,
}

impl TopicId {
    pub const ALL: [TopicId; TOPIC_COUNT] = [
        TopicId::ReligionBelief,
        TopicId::ScienceTechnology,
        TopicId::Education,
        TopicId::DisasterAccident,
        TopicId::Labour,
        TopicId::Weather,
        TopicId::Health,
        TopicId::Other,
        TopicId::EnvironmentalIssue,
        TopicId::Sport,
        TopicId::LifestyleLeisure,
        TopicId::SocialIssue,
        TopicId::EconomyBusinessFinance,
        TopicId::Commercial,
        TopicId::ArtsCultureEntertainment,
        TopicId::CrimeLawJustice,
        TopicId::Politics,
        TopicId::UnrestConflictsWar,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TopicId::ReligionBelief => "religion_belief",
            TopicId::ScienceTechnology => "science_technology",
            TopicId::Education => "education",
            TopicId::DisasterAccident => "disaster_accident",
            TopicId::Labour => "labour",
            TopicId::Weather => "weather",
            TopicId::Health => "health",
            TopicId::Other => "other",
            TopicId::EnvironmentalIssue => "environmental_issue",
            TopicId::Sport => "sport",
            TopicId::LifestyleLeisure => "lifestyle_leisure",
            TopicId::SocialIssue => "social_issue",
            TopicId::EconomyBusinessFinance => "economy_business_finance",
            TopicId::Commercial => "commercial",
            TopicId::ArtsCultureEntertainment => "arts_culture_entertainment",
            TopicId::CrimeLawJustice => "crime_law_justice",
            TopicId::Politics => "politics",
            TopicId::UnrestConflictsWar => "unrest_conflicts_war",
        }
    }

    /// Position in the canonical order, usable as an array index.
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for TopicId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TopicId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TopicId::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Taxonomy(format!("`{s}` is not a canonical topic id")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topic {
    pub id: TopicId,
    pub display_name: String,
    pub description: String,
    #[serde(default)]
    pub aliases: Vec<String>,
}

#[derive(Deserialize)]
struct RawTopic {
    id: String,
    display_name: String,
    #[serde(default)]
    description: String,
    #[serde(default)]
    aliases: Vec<String>,
}

/// The 18-topic taxonomy with an index from normalized surface forms to ids.
#[derive(Debug, Clone)]
pub struct Taxonomy {
    topics: Vec<Topic>,
    alias_index: HashMap<String, TopicId>,
}

impl Taxonomy {
    /// Parse and validate a taxonomy JSON document.
    ///
    /// Rejects unknown or duplicate ids, missing topics, and surface forms that
    /// normalize to the same key for two different topics.
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let raw: Vec<RawTopic> =
            serde_json::from_slice(bytes).map_err(|e| Error::Taxonomy(e.to_string()))?;

        let mut topics = Vec::with_capacity(raw.len());
        let mut seen = BTreeSet::new();
        for r in raw {
            let id: TopicId = r.id.parse()?;
            if !seen.insert(id) {
                return Err(Error::Taxonomy(format!("duplicate topic id `{id}`")));
            }
            topics.push(Topic {
                id,
                display_name: r.display_name,
                description: r.description,
                aliases: r.aliases,
            });
        }
        if topics.len() != TOPIC_COUNT {
            let missing: Vec<_> = TopicId::ALL
                .iter()
                .filter(|t| !seen.contains(t))
                .map(|t| t.as_str())
                .collect();
            return Err(Error::Taxonomy(format!("missing topics: {}", missing.join(", "))));
        }
        topics.sort_by_key(|t| t.id);

        let mut alias_index = HashMap::new();
        for topic in &topics {
            let forms = std::iter::once(topic.id.as_str())
                .chain(std::iter::once(topic.display_name.as_str()))
                .chain(topic.aliases.iter().map(String::as_str));
            for form in forms {
                let key = normalize_label(form);
                if key.is_empty() {
                    return Err(Error::Taxonomy(format!("empty surface form for `{}`", topic.id)));
                }
                match alias_index.insert(key.clone(), topic.id) {
                    Some(prev) if prev != topic.id => {
                        return Err(Error::Taxonomy(format!(
                            "surface form `{form}` (normalized `{key}`) maps to both `{prev}` and `{}`",
                            topic.id
                        )));
                    }
                    _ => {}
                }
            }
        }

        Ok(Taxonomy {
            topics,
            alias_index,
        })
    }

    /// Taxonomy shipped with the crate: English ids, French display names.
    /// Override with `--taxonomy` to edit descriptions or aliases.
    pub fn builtin() -> Self {
        Self::from_json(DEFAULT_TAXONOMY.as_bytes()).expect("builtin taxonomy is valid")
    }

    /// Topics in canonical order.
    pub fn topics(&self) -> &[Topic] {
        &self.topics
    }

    pub fn topic(&self, id: TopicId) -> &Topic {
        &self.topics[id.index()]
    }

    /// Resolve a free-form label. `None` means the label is unknown; no fuzzy
    /// matching is attempted.
    pub fn canonical_topic(&self, raw_label: &str) -> Option<&Topic> {
        self.alias_index
            .get(&normalize_label(raw_label))
            .map(|id| self.topic(*id))
    }

    /// Stable digest of the canonical id list, shared with classification
    /// services so both sides can check they agree on the label space.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let joined = self
            .topics
            .iter()
            .map(|t| t.id.as_str())
            .collect::<Vec<_>>()
            .join("\n");
        hex::encode(Sha256::digest(joined.as_bytes()))
    }
}

/// Lowercase, strip accents (NFKD then drop combining marks), trim and
/// collapse internal whitespace.
pub fn normalize_label(raw: &str) -> String {
    let stripped: String = raw
        .to_lowercase()
        .nfkd()
        .filter(|c| !is_combining_mark(*c))
        .collect();
    stripped.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Medium {
    Tv,
    Radio,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ownership {
    Public,
    Private,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelMeta {
    pub channel_id: String,
    #[serde(default)]
    pub name: String,
    pub medium: Medium,
    pub ownership: Ownership,
    #[serde(default)]
    pub news_cycle_24_7: bool,
}

/// One timed ASR segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub utt_id: String,
    pub channel_id: String,
    pub program_id: String,
    pub start_s: f64,
    pub end_s: f64,
    pub text: String,
}

impl Utterance {
    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

/// A run of consecutive utterances of one program, the unit of topic labeling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dialogue {
    pub dialogue_id: String,
    pub program_id: String,
    pub channel_id: String,
    pub member_utt_ids: Vec<String>,
    pub start_s: f64,
    pub end_s: f64,
    pub speech_duration_s: f64,
    pub text: String,
}

/// Non-empty set of canonical topics for one dialogue.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSet {
    pub dialogue_id: String,
    #[serde(rename = "labels")]
    pub topics: BTreeSet<TopicId>,
}

impl LabelSet {
    pub fn new(dialogue_id: impl Into<String>, topics: BTreeSet<TopicId>) -> Result<Self> {
        let dialogue_id = dialogue_id.into();
        if topics.is_empty() {
            return Err(Error::MissingLabels(dialogue_id));
        }
        Ok(LabelSet {
            dialogue_id,
            topics,
        })
    }

    pub fn contains(&self, topic: TopicId) -> bool {
        self.topics.contains(&topic)
    }
}
