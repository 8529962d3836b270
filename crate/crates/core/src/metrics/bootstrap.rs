//! Percentile bootstrap over dialogues.
//!
//! Resample `i` draws its indices from a ChaCha8 generator seeded with
//! `seed + i`, and indices are sampled as `u64`, so results do not depend
//! on thread count or pointer width.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::soft::{align, dialogue_cells, prf, Averaging, SoftCounts, TopicCounts};
use crate::corpus::{LabelSet, TOPIC_COUNT};
use crate::error::{Error, Result};
use crate::ingest::GoldMass;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    MicroF1,
    MicroPrecision,
    MicroRecall,
    MacroF1,
    MacroPrecision,
    MacroRecall,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::MicroF1,
        Metric::MicroPrecision,
        Metric::MicroRecall,
        Metric::MacroF1,
        Metric::MacroPrecision,
        Metric::MacroRecall,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::MicroF1 => "micro_f1",
            Metric::MicroPrecision => "micro_precision",
            Metric::MicroRecall => "micro_recall",
            Metric::MacroF1 => "macro_f1",
            Metric::MacroPrecision => "macro_precision",
            Metric::MacroRecall => "macro_recall",
        }
    }

    pub fn evaluate(self, counts: &SoftCounts) -> f64 {
        let (avg, pick): (Averaging, fn(&super::Scores) -> f64) = match self {
            Metric::MicroF1 => (Averaging::Micro, |s| s.f1),
            Metric::MicroPrecision => (Averaging::Micro, |s| s.precision),
            Metric::MicroRecall => (Averaging::Micro, |s| s.recall),
            Metric::MacroF1 => (Averaging::Macro, |s| s.f1),
            Metric::MacroPrecision => (Averaging::Macro, |s| s.precision),
            Metric::MacroRecall => (Averaging::Macro, |s| s.recall),
        };
        pick(&prf(counts, avg))
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown metric `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
    pub n_resamples: usize,
    pub confidence: f64,
}

impl Interval {
    pub fn half_width(&self) -> f64 {
        (self.hi - self.lo) / 2.0
    }
}

/// Sorted bootstrap replicates of one metric plus the full-sample value.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapSamples {
    pub metric: Metric,
    pub point: f64,
    pub values: Vec<f64>,
}

/// Linear interpolation between order statistics of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl BootstrapSamples {
    /// Percentile interval at `(1-c)/2` and `1-(1-c)/2`.
    pub fn interval(&self, confidence: f64) -> Result<Interval> {
        if !(confidence > 0.0 && confidence < 1.0) {
            return Err(Error::Config(format!("confidence must be in (0, 1), got {confidence}")));
        }
        let alpha = (1.0 - confidence) / 2.0;
        Ok(Interval {
            point: self.point,
            lo: quantile(&self.values, alpha),
            hi: quantile(&self.values, 1.0 - alpha),
            n_resamples: self.values.len(),
            confidence,
        })
    }
}

/// Draw `n` resamples once and evaluate every requested metric on each.
pub fn bootstrap_samples(
    gold: &[GoldMass],
    pred: &[LabelSet],
    metrics: &[Metric],
    n: usize,
    seed: u64,
) -> Result<Vec<BootstrapSamples>> {
    if n == 0 {
        return Err(Error::Config("bootstrap needs at least one resample".into()));
    }
    let cells: Vec<[TopicCounts; TOPIC_COUNT]> = align(gold, pred)?
        .into_iter()
        .map(|(g, p)| dialogue_cells(g, p))
        .collect();
    if cells.is_empty() {
        return Err(Error::EmptyInput("no dialogues to resample"));
    }

    let mut full = SoftCounts::default();
    for c in &cells {
        full.add_dialogue(c);
    }

    let size = cells.len() as u64;
    let replicates: Vec<Vec<f64>> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i));
            let mut counts = SoftCounts::default();
            for _ in 0..size {
                let j = rng.gen_range(0..size) as usize;
                counts.add_dialogue(&cells[j]);
            }
            metrics.iter().map(|m| m.evaluate(&counts)).collect()
        })
        .collect();

    Ok(metrics
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let mut values: Vec<f64> = replicates.iter().map(|r| r[k]).collect();
            values.sort_by(f64::total_cmp);
            BootstrapSamples {
                metric: *m,
                point: m.evaluate(&full),
                values,
            }
        })
        .collect())
}

pub fn bootstrap_ci(
    gold: &[GoldMass],
    pred: &[LabelSet],
    metric: Metric,
    n: usize,
    confidence: f64,
    seed: u64,
) -> Result<Interval> {
    bootstrap_samples(gold, pred, &[metric], n, seed)?[0].interval(confidence)
}
