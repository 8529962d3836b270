//! Soft-label confusion counts against double-annotated gold.
//!
//! Each (dialogue, topic) cell carries a gold mass `p` in {0, 0.5, 1}. A
//! positive prediction adds `p` true positive and `1 - p` false positive; a
//! negative prediction adds `p` false negative and `1 - p` true negative.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::{LabelSet, TopicId, TOPIC_COUNT};
use crate::error::{Error, Result};
use crate::ingest::GoldMass;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TopicCounts {
    pub tp: f64,
    pub fp: f64,
    #[serde(rename = "fn")]
    pub fn_: f64,
    pub tn: f64,
}

impl TopicCounts {
    fn add(&mut self, other: &TopicCounts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
    }

    pub fn total(&self) -> f64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoftCounts {
    pub per_topic: [TopicCounts; TOPIC_COUNT],
    pub n_dialogues: usize,
}

impl Default for SoftCounts {
    fn default() -> Self {
        SoftCounts {
            per_topic: [TopicCounts::default(); TOPIC_COUNT],
            n_dialogues: 0,
        }
    }
}

impl SoftCounts {
    pub fn topic(&self, topic: TopicId) -> &TopicCounts {
        &self.per_topic[topic.index()]
    }

    pub(crate) fn add_dialogue(&mut self, cells: &[TopicCounts; TOPIC_COUNT]) {
        for (acc, c) in self.per_topic.iter_mut().zip(cells) {
            acc.add(c);
        }
        self.n_dialogues += 1;
    }
}

/// Per-topic contribution of a single dialogue.
pub fn dialogue_cells(gold: &GoldMass, pred: &LabelSet) -> [TopicCounts; TOPIC_COUNT] {
    let mut cells = [TopicCounts::default(); TOPIC_COUNT];
    for topic in TopicId::ALL {
        let p = gold.p(topic);
        let cell = &mut cells[topic.index()];
        if pred.contains(topic) {
            cell.tp = p;
            cell.fp = 1.0 - p;
        } else {
            cell.fn_ = p;
            cell.tn = 1.0 - p;
        }
    }
    cells
}

/// Pair gold and predictions by dialogue id, in gold order. Both sides must
/// cover the same ids.
pub fn align<'a>(
    gold: &'a [GoldMass],
    pred: &'a [LabelSet],
) -> Result<Vec<(&'a GoldMass, &'a LabelSet)>> {
    let by_id: HashMap<&str, &LabelSet> = pred.iter().map(|p| (p.dialogue_id.as_str(), p)).collect();
    let gold_ids: BTreeSet<&str> = gold.iter().map(|g| g.dialogue_id.as_str()).collect();
    let missing_in_pred: Vec<String> = gold_ids
        .iter()
        .filter(|id| !by_id.contains_key(*id))
        .map(|s| s.to_string())
        .collect();
    let mut missing_in_gold: Vec<String> = by_id
        .keys()
        .filter(|id| !gold_ids.contains(*id))
        .map(|s| s.to_string())
        .collect();
    missing_in_gold.sort();
    if !missing_in_pred.is_empty() || !missing_in_gold.is_empty() {
        return Err(Error::IdMismatch {
            missing_in_pred,
            missing_in_gold,
        });
    }
    Ok(gold.iter().map(|g| (g, by_id[g.dialogue_id.as_str()])).collect())
}

pub fn soft_confusion(gold: &[GoldMass], pred: &[LabelSet]) -> Result<SoftCounts> {
    let mut counts = SoftCounts::default();
    for (g, p) in align(gold, pred)? {
        counts.add_dialogue(&dialogue_cells(g, p));
    }
    Ok(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    Micro,
    Macro,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

impl Scores {
    /// Precision, recall and F1 with zero-denominator ratios defined as 0.
    pub fn from_counts(tp: f64, fp: f64, fn_: f64) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = ratio(2.0 * precision * recall, precision + recall);
        Scores {
            precision,
            recall,
            f1,
        }
    }
}

pub fn topic_scores(counts: &SoftCounts) -> [Scores; TOPIC_COUNT] {
    counts
        .per_topic
        .map(|c| Scores::from_counts(c.tp, c.fp, c.fn_))
}

pub fn prf(counts: &SoftCounts, averaging: Averaging) -> Scores {
    match averaging {
        Averaging::Micro => {
            let (tp, fp, fn_) = counts
                .per_topic
                .iter()
                .fold((0.0, 0.0, 0.0), |(tp, fp, fn_), c| (tp + c.tp, fp + c.fp, fn_ + c.fn_));
            Scores::from_counts(tp, fp, fn_)
        }
        Averaging::Macro => {
            let per = topic_scores(counts);
            let n = TOPIC_COUNT as f64;
            Scores {
                precision: per.iter().map(|s| s.precision).sum::<f64>() / n,
                recall: per.iter().map(|s| s.recall).sum::<f64>() / n,
                f1: per.iter().map(|s| s.f1).sum::<f64>() / n,
            }
        }
    }
}
