//! Gender speaking time per topic: parity, per-gender topic distribution and
//! disparity against the corpus-wide parity.
//!
//! Times are accumulated as integer microseconds so aggregation is exact and
//! independent of summation order.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::corpus::{Dialogue, LabelSet, TopicId, Utterance, TOPIC_COUNT};
use crate::error::{Error, Result};
use crate::ingest::{ChannelRegistry, GenderLabel, GenderSpan, GroupBy};

const MICROS: f64 = 1e6;

fn to_micros(secs: f64) -> u64 {
    (secs * MICROS).round() as u64
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct TimeByGender {
    pub female_us: u64,
    pub male_us: u64,
}

impl TimeByGender {
    pub fn from_secs(female_s: f64, male_s: f64) -> Self {
        TimeByGender {
            female_us: to_micros(female_s),
            male_us: to_micros(male_s),
        }
    }

    pub fn female_s(&self) -> f64 {
        self.female_us as f64 / MICROS
    }

    pub fn male_s(&self) -> f64 {
        self.male_us as f64 / MICROS
    }

    pub fn total_s(&self) -> f64 {
        (self.female_us + self.male_us) as f64 / MICROS
    }

    pub fn add(&mut self, other: &TimeByGender) {
        self.female_us += other.female_us;
        self.male_us += other.male_us;
    }

    pub fn swapped(&self) -> Self {
        TimeByGender {
            female_us: self.male_us,
            male_us: self.female_us,
        }
    }

    pub fn get(&self, gender: Gender) -> u64 {
        match gender {
            Gender::Female => self.female_us,
            Gender::Male => self.male_us,
        }
    }
}

impl Serialize for TimeByGender {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("TimeByGender", 2)?;
        s.serialize_field("female_s", &self.female_s())?;
        s.serialize_field("male_s", &self.male_s())?;
        s.end()
    }
}

impl<'de> Deserialize<'de> for TimeByGender {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Secs {
            female_s: f64,
            male_s: f64,
        }
        let s = Secs::deserialize(deserializer)?;
        Ok(TimeByGender::from_secs(s.female_s, s.male_s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Female,
    Male,
}

/// Gendered overlap of one utterance with sorted, non-overlapping spans.
/// Music, noise and other spans are ignored.
pub fn gender_durations(u: &Utterance, spans: &[GenderSpan]) -> TimeByGender {
    overlap_with(u.start_s, u.end_s, spans, 0.0)
}

fn overlap_with(start: f64, end: f64, spans: &[GenderSpan], offset: f64) -> TimeByGender {
    let first = spans.partition_point(|s| s.end_s + offset <= start);
    let mut out = TimeByGender::default();
    for s in &spans[first..] {
        let (s0, s1) = (s.start_s + offset, s.end_s + offset);
        if s0 >= end {
            break;
        }
        let overlap = (s1.min(end) - s0.max(start)).max(0.0);
        match s.label {
            GenderLabel::Female => out.female_us += to_micros(overlap),
            GenderLabel::Male => out.male_us += to_micros(overlap),
            _ => {}
        }
    }
    out
}

/// Gender spans per media file with an optional time offset that maps span
/// times onto the transcript timeline.
#[derive(Debug, Clone, Default)]
pub struct GenderIndex {
    spans: HashMap<String, Vec<GenderSpan>>,
    offsets: HashMap<String, f64>,
}

impl GenderIndex {
    /// Group spans by media id. Each group is sorted by start time.
    pub fn new(spans: impl IntoIterator<Item = GenderSpan>) -> Self {
        let mut by_media: HashMap<String, Vec<GenderSpan>> = HashMap::new();
        for s in spans {
            by_media.entry(s.media_id.clone()).or_default().push(s);
        }
        for v in by_media.values_mut() {
            v.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
        }
        GenderIndex {
            spans: by_media,
            offsets: HashMap::new(),
        }
    }

    pub fn with_offsets(mut self, offsets: HashMap<String, f64>) -> Self {
        self.offsets = offsets;
        self
    }

    pub fn media_count(&self) -> usize {
        self.spans.len()
    }

    /// Speaking time of an utterance, looked up by its program id.
    pub fn durations(&self, u: &Utterance) -> TimeByGender {
        match self.spans.get(&u.program_id) {
            Some(spans) => {
                let offset = self.offsets.get(&u.program_id).copied().unwrap_or(0.0);
                overlap_with(u.start_s, u.end_s, spans, offset)
            }
            None => TimeByGender::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicGenderAggregate {
    pub group: Option<String>,
    pub n_dialogues: usize,
    pub per_topic: [TimeByGender; TOPIC_COUNT],
    /// Each speech second counted once regardless of label count.
    pub global_unique: TimeByGender,
}

impl TopicGenderAggregate {
    fn empty(group: Option<String>) -> Self {
        TopicGenderAggregate {
            group,
            n_dialogues: 0,
            per_topic: [TimeByGender::default(); TOPIC_COUNT],
            global_unique: TimeByGender::default(),
        }
    }

    fn merge(&mut self, other: &TopicGenderAggregate) {
        self.n_dialogues += other.n_dialogues;
        for (a, b) in self.per_topic.iter_mut().zip(&other.per_topic) {
            a.add(b);
        }
        self.global_unique.add(&other.global_unique);
    }

    pub fn topic(&self, topic: TopicId) -> &TimeByGender {
        &self.per_topic[topic.index()]
    }
}

/// Attribute each dialogue's gendered speaking time to every topic in its
/// label set and once to the unique total, one aggregate per group key.
/// Groups come back sorted by key.
pub fn topic_gender_aggregate(
    dialogues: &[Dialogue],
    utterances: &[Utterance],
    labels: &[LabelSet],
    index: &GenderIndex,
    registry: &ChannelRegistry,
    group_by: GroupBy,
) -> Result<Vec<TopicGenderAggregate>> {
    let utt_by_id: HashMap<&str, &Utterance> =
        utterances.iter().map(|u| (u.utt_id.as_str(), u)).collect();
    let labels_by_id: HashMap<&str, &LabelSet> =
        labels.iter().map(|l| (l.dialogue_id.as_str(), l)).collect();

    let per_dialogue = dialogues
        .par_iter()
        .map(|d| {
            let labels = labels_by_id
                .get(d.dialogue_id.as_str())
                .ok_or_else(|| Error::MissingLabels(d.dialogue_id.clone()))?;
            let mut time = TimeByGender::default();
            for id in &d.member_utt_ids {
                let u = utt_by_id
                    .get(id.as_str())
                    .ok_or_else(|| Error::MissingUtterance(id.clone()))?;
                time.add(&index.durations(u));
            }
            Ok((registry.group_key(&d.channel_id, group_by), time, *labels))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut groups: BTreeMap<Option<String>, TopicGenderAggregate> = BTreeMap::new();
    for (key, time, labels) in per_dialogue {
        let agg = groups
            .entry(key.clone())
            .or_insert_with(|| TopicGenderAggregate::empty(key));
        agg.n_dialogues += 1;
        agg.global_unique.add(&time);
        for t in &labels.topics {
            agg.per_topic[t.index()].add(&time);
        }
    }
    Ok(groups.into_values().collect())
}

/// Female share of gendered speaking time; `None` without gendered speech.
pub fn parity(t: &TimeByGender) -> Option<f64> {
    let total = t.female_us + t.male_us;
    (total > 0).then(|| t.female_us as f64 / total as f64)
}

/// Share of one gender's topic-attributed time spent on each topic.
pub fn gender_topic_distribution(
    agg: &TopicGenderAggregate,
    gender: Gender,
) -> Result<[f64; TOPIC_COUNT]> {
    let total: u64 = agg.per_topic.iter().map(|t| t.get(gender)).sum();
    if total == 0 {
        let scope = agg.group.as_deref().unwrap_or("all");
        return Err(Error::NoGenderedSpeech(format!("{gender:?} in group {scope}").to_lowercase()));
    }
    Ok(agg.per_topic.map(|t| t.get(gender) as f64 / total as f64))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisparityMode {
    /// `global_parity - parity(topic)`.
    #[default]
    Parity,
    /// `dist_male(topic) - dist_female(topic)`.
    Distribution,
}

impl std::str::FromStr for DisparityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "parity" => Ok(DisparityMode::Parity),
            "distribution" => Ok(DisparityMode::Distribution),
            other => Err(Error::Config(format!(
                "unknown disparity mode `{other}` (expected parity or distribution)"
            ))),
        }
    }
}

/// Per-topic disparity. Positive values mean the topic leans male relative
/// to the reference. Missing parities stay missing.
pub fn disparity(
    agg: &TopicGenderAggregate,
    global_parity: Option<f64>,
    mode: DisparityMode,
) -> [Option<f64>; TOPIC_COUNT] {
    match mode {
        DisparityMode::Parity => agg
            .per_topic
            .map(|t| Some(global_parity? - parity(&t)?)),
        DisparityMode::Distribution => {
            let female = gender_topic_distribution(agg, Gender::Female).ok();
            let male = gender_topic_distribution(agg, Gender::Male).ok();
            let mut out = [None; TOPIC_COUNT];
            if let (Some(f), Some(m)) = (female, male) {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = Some(m[i] - f[i]);
                }
            }
            out
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicAnalysis {
    pub topic: TopicId,
    pub time: TimeByGender,
    pub parity: Option<f64>,
    pub dist_female: Option<f64>,
    pub dist_male: Option<f64>,
    pub disparity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupAnalysis {
    /// `all` for the whole corpus.
    pub group: String,
    pub n_dialogues: usize,
    pub global: TimeByGender,
    pub global_parity: Option<f64>,
    pub topics: Vec<TopicAnalysis>,
}

pub const OVERALL_GROUP: &str = "all";

/// Parity, distribution and disparity for one aggregate. Disparity in
/// parity mode is taken against the aggregate's own global parity.
pub fn analyze_aggregate(agg: &TopicGenderAggregate, mode: DisparityMode) -> GroupAnalysis {
    let global_parity = parity(&agg.global_unique);
    let female = gender_topic_distribution(agg, Gender::Female).ok();
    let male = gender_topic_distribution(agg, Gender::Male).ok();
    let disp = disparity(agg, global_parity, mode);
    GroupAnalysis {
        group: agg.group.clone().unwrap_or_else(|| OVERALL_GROUP.into()),
        n_dialogues: agg.n_dialogues,
        global: agg.global_unique,
        global_parity,
        topics: TopicId::ALL
            .iter()
            .map(|&t| {
                let i = t.index();
                TopicAnalysis {
                    topic: t,
                    time: agg.per_topic[i],
                    parity: parity(&agg.per_topic[i]),
                    dist_female: female.map(|d| d[i]),
                    dist_male: male.map(|d| d[i]),
                    disparity: disp[i],
                }
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub mode: DisparityMode,
    /// Whole corpus; `None` for an empty corpus.
    pub overall: Option<GroupAnalysis>,
    /// Per group key; empty for ungrouped runs.
    pub groups: Vec<GroupAnalysis>,
}

/// Whole-corpus analysis plus one analysis per group.
pub fn analyze(aggregates: &[TopicGenderAggregate], mode: DisparityMode) -> AnalysisReport {
    let grouped = aggregates.iter().any(|a| a.group.is_some());
    let overall = (!aggregates.is_empty()).then(|| {
        let mut total = TopicGenderAggregate::empty(None);
        for a in aggregates {
            total.merge(a);
        }
        analyze_aggregate(&total, mode)
    });
    AnalysisReport {
        mode,
        overall,
        groups: if grouped {
            aggregates.iter().map(|a| analyze_aggregate(a, mode)).collect()
        } else {
            Vec::new()
        },
    }
}
