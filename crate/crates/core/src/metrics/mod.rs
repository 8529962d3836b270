//! Evaluation against soft gold labels, bootstrap intervals, inter-annotator
//! agreement and dataset splitting.

mod agreement;
mod bootstrap;
mod soft;
mod split;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use agreement::{agreement_report, krippendorff_alpha, AgreementResult, TopicAgreement};
pub use bootstrap::{bootstrap_ci, bootstrap_samples, BootstrapSamples, Interval, Metric};
pub use soft::{
    align, dialogue_cells, prf, soft_confusion, topic_scores, Averaging, Scores, SoftCounts,
    TopicCounts,
};
pub use split::split_dataset;

use crate::corpus::{LabelSet, TopicId};
use crate::error::Result;
use crate::ingest::GoldMass;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalParams {
    /// Number of bootstrap resamples; 0 skips intervals.
    pub bootstrap: usize,
    pub confidence: f64,
    pub seed: u64,
}

impl Default for EvalParams {
    fn default() -> Self {
        EvalParams {
            bootstrap: 1000,
            confidence: 0.95,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicScores {
    pub topic: TopicId,
    #[serde(flatten)]
    pub scores: Scores,
    #[serde(flatten)]
    pub counts: TopicCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub n_dialogues: usize,
    pub micro: Scores,
    #[serde(rename = "macro")]
    pub macro_: Scores,
    /// Keyed by metric name, empty when bootstrapping is disabled.
    pub intervals: BTreeMap<String, Interval>,
    pub per_topic: Vec<TopicScores>,
    pub params: EvalParams,
}

/// Micro and macro scores, per-topic breakdown and bootstrap intervals for
/// every metric drawn from one shared set of resamples.
pub fn evaluate(gold: &[GoldMass], pred: &[LabelSet], params: EvalParams) -> Result<EvaluationReport> {
    let counts = soft_confusion(gold, pred)?;
    let per = topic_scores(&counts);
    let intervals = if params.bootstrap == 0 {
        BTreeMap::new()
    } else {
        bootstrap_samples(gold, pred, &Metric::ALL, params.bootstrap, params.seed)?
            .iter()
            .map(|s| Ok((s.metric.to_string(), s.interval(params.confidence)?)))
            .collect::<Result<_>>()?
    };
    Ok(EvaluationReport {
        n_dialogues: counts.n_dialogues,
        micro: prf(&counts, Averaging::Micro),
        macro_: prf(&counts, Averaging::Macro),
        intervals,
        per_topic: TopicId::ALL
            .iter()
            .map(|&t| TopicScores {
                topic: t,
                scores: per[t.index()],
                counts: *counts.topic(t),
            })
            .collect(),
        params,
    })
}
