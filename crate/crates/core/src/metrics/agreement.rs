//! Krippendorff's alpha for two coders and binary nominal values.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::{TopicId, TOPIC_COUNT};
use crate::error::Result;
use crate::ingest::{pair_annotations, HumanAnnotation};

/// Alpha over units coded by exactly two coders.
///
/// Every unit contributes both ordered value pairs to the coincidence matrix,
/// so with `n = 2 * units`, `D_o = (o_01 + o_10) / n` and
/// `D_e = 2 * n_0 * n_1 / (n * (n - 1))`. Returns `None` when `D_e = 0`
/// (every coding has the same value, or fewer than two codings).
pub fn krippendorff_alpha(units: &[[bool; 2]]) -> Option<f64> {
    let n = 2 * units.len() as u64;
    let n1: u64 = units.iter().map(|u| u[0] as u64 + u[1] as u64).sum();
    let n0 = n - n1;
    if n < 2 || n0 == 0 || n1 == 0 {
        return None;
    }
    let disagreeing = units.iter().filter(|u| u[0] != u[1]).count() as f64;
    let n = n as f64;
    let d_o = 2.0 * disagreeing / n;
    let d_e = 2.0 * n0 as f64 * n1 as f64 / (n * (n - 1.0));
    Some(1.0 - d_o / d_e)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicAgreement {
    pub topic: TopicId,
    pub alpha: Option<f64>,
    /// Summed gold mass over dialogues.
    pub mass: f64,
    pub mass_share: f64,
    /// Speech seconds weighted by gold mass.
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementResult {
    pub n_dialogues: usize,
    pub per_topic: Vec<TopicAgreement>,
    /// Alpha over all (dialogue, topic) units pooled together.
    pub global_alpha: Option<f64>,
    pub total_duration_s: f64,
    pub mean_labels_per_annotator: BTreeMap<String, f64>,
    /// Dialogues missing from the duration table, counted as zero seconds.
    pub dialogues_without_duration: usize,
}

/// Per-topic and pooled agreement with Table-1 style mass shares and
/// durations. `durations` maps dialogue id to speech seconds.
pub fn agreement_report(
    annotations: &[HumanAnnotation],
    durations: &HashMap<String, f64>,
) -> Result<AgreementResult> {
    let pairs = pair_annotations(annotations)?;
    let mut units: Vec<Vec<[bool; 2]>> = (0..TOPIC_COUNT).map(|_| Vec::with_capacity(pairs.len())).collect();
    let mut mass = [0.0; TOPIC_COUNT];
    let mut duration = [0.0; TOPIC_COUNT];
    let mut total_duration_s = 0.0;
    let mut without_duration = 0;

    for (a, b) in &pairs {
        let secs = match durations.get(&a.dialogue_id) {
            Some(s) => *s,
            None => {
                without_duration += 1;
                0.0
            }
        };
        total_duration_s += secs;
        for topic in TopicId::ALL {
            let unit = [a.topics.contains(&topic), b.topics.contains(&topic)];
            let p = (unit[0] as u8 + unit[1] as u8) as f64 / 2.0;
            units[topic.index()].push(unit);
            mass[topic.index()] += p;
            duration[topic.index()] += p * secs;
        }
    }

    let total_mass: f64 = mass.iter().sum();
    let per_topic = TopicId::ALL
        .iter()
        .map(|&topic| {
            let i = topic.index();
            TopicAgreement {
                topic,
                alpha: krippendorff_alpha(&units[i]),
                mass: mass[i],
                mass_share: if total_mass > 0.0 { mass[i] / total_mass } else { 0.0 },
                duration_s: duration[i],
            }
        })
        .collect();
    let pooled: Vec<[bool; 2]> = units.concat();

    let mut label_totals: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for a in annotations {
        let e = label_totals.entry(a.annotator_id.clone()).or_default();
        e.0 += a.topics.len();
        e.1 += 1;
    }

    Ok(AgreementResult {
        n_dialogues: pairs.len(),
        per_topic,
        global_alpha: krippendorff_alpha(&pooled),
        total_duration_s,
        mean_labels_per_annotator: label_totals
            .into_iter()
            .map(|(k, (labels, docs))| (k, labels as f64 / docs as f64))
            .collect(),
        dialogues_without_duration: without_duration,
    })
}
