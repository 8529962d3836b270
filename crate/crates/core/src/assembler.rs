//! Greedy grouping of utterances into dialogues.
//!
//! Utterances of one program are scanned left to right. The next utterance
//! joins the current dialogue iff the gap to the dialogue's end is below
//! `max_gap_s` and the dialogue's duration including it stays below
//! `max_total_s`. Duration is the summed speech time of the members by
//! default, or the wall-clock span in [`DurationMode::Span`].

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Dialogue, Utterance};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DurationMode {
    /// Sum of member durations.
    #[default]
    SpeechSum,
    /// First member start to last member end, gaps included.
    Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssemblyConfig {
    pub max_gap_s: f64,
    pub max_total_s: f64,
    pub duration_mode: DurationMode,
}

impl Default for AssemblyConfig {
    fn default() -> Self {
        AssemblyConfig {
            max_gap_s: 10.0,
            max_total_s: 60.0,
            duration_mode: DurationMode::SpeechSum,
        }
    }
}

impl AssemblyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_gap_s > 0.0 && self.max_gap_s.is_finite()) {
            return Err(Error::Config(format!("max_gap_s must be > 0, got {}", self.max_gap_s)));
        }
        if !(self.max_total_s > 0.0 && self.max_total_s.is_finite()) {
            return Err(Error::Config(format!(
                "max_total_s must be > 0, got {}",
                self.max_total_s
            )));
        }
        Ok(())
    }
}

/// Trim each member text and join with single spaces.
pub fn join_texts<'a>(texts: impl IntoIterator<Item = &'a str>) -> String {
    let mut out = String::new();
    for t in texts {
        let t = t.trim();
        if t.is_empty() {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(t);
    }
    out
}

/// Dialogue id: program id plus the program-local index of its first member.
pub fn dialogue_id(program_id: &str, first_index: usize) -> String {
    format!("{program_id}-{first_index:05}")
}

/// Assemble the utterances of a single program.
///
/// Input must be sorted by start time and non-overlapping, as produced by
/// ingest.
pub fn assemble_dialogues(utterances: &[Utterance], cfg: &AssemblyConfig) -> Result<Vec<Dialogue>> {
    cfg.validate()?;
    let Some(first) = utterances.first() else {
        return Ok(Vec::new());
    };
    let program_id = &first.program_id;
    let fail = |message: String| Error::Assembly {
        program_id: program_id.clone(),
        message,
    };
    for (i, u) in utterances.iter().enumerate() {
        if &u.program_id != program_id {
            return Err(fail(format!("utterance {} belongs to program {}", u.utt_id, u.program_id)));
        }
        if u.end_s.partial_cmp(&u.start_s) != Some(std::cmp::Ordering::Greater) {
            return Err(fail(format!("utterance {} has non-positive duration", u.utt_id)));
        }
        if i > 0 {
            let prev = &utterances[i - 1];
            if u.start_s < prev.start_s {
                return Err(fail(format!("utterance {} is out of order", u.utt_id)));
            }
            if u.start_s < prev.end_s {
                return Err(fail(format!("utterance {} overlaps {}", u.utt_id, prev.utt_id)));
            }
        }
    }

    let mut groups: Vec<(usize, usize)> = Vec::new();
    let mut start_idx = 0;
    let mut speech = utterances[0].duration_s();
    for i in 1..utterances.len() {
        let u = &utterances[i];
        let current_end = utterances[i - 1].end_s;
        let gap = u.start_s - current_end;
        let total = match cfg.duration_mode {
            DurationMode::SpeechSum => speech + u.duration_s(),
            DurationMode::Span => u.end_s - utterances[start_idx].start_s,
        };
        if gap < cfg.max_gap_s && total < cfg.max_total_s {
            speech += u.duration_s();
        } else {
            groups.push((start_idx, i));
            start_idx = i;
            speech = u.duration_s();
        }
    }
    groups.push((start_idx, utterances.len()));

    Ok(groups
        .into_iter()
        .map(|(a, b)| {
            let members = &utterances[a..b];
            Dialogue {
                dialogue_id: dialogue_id(program_id, a),
                program_id: program_id.clone(),
                channel_id: members[0].channel_id.clone(),
                member_utt_ids: members.iter().map(|u| u.utt_id.clone()).collect(),
                start_s: members[0].start_s,
                end_s: members[members.len() - 1].end_s,
                speech_duration_s: members.iter().map(Utterance::duration_s).sum(),
                text: join_texts(members.iter().map(|u| u.text.as_str())),
            }
        })
        .collect())
}

/// Assemble a whole corpus, one independent pass per program.
///
/// Programs keep their first-appearance order; within a program the input
/// order is kept and must already be sorted.
pub fn assemble_corpus(utterances: &[Utterance], cfg: &AssemblyConfig) -> Result<Vec<Dialogue>> {
    let mut order: Vec<&str> = Vec::new();
    let mut by_program: HashMap<&str, Vec<Utterance>> = HashMap::new();
    for u in utterances {
        let entry = by_program.entry(&u.program_id).or_insert_with(|| {
            order.push(&u.program_id);
            Vec::new()
        });
        entry.push(u.clone());
    }
    let per_program: Vec<Vec<Dialogue>> = order
        .par_iter()
        .map(|p| assemble_dialogues(&by_program[p], cfg))
        .collect::<Result<_>>()?;
    Ok(per_program.into_iter().flatten().collect())
}

/// Rebuild a dialogue's text from its member utterances.
pub fn dialogue_text(dialogue: &Dialogue, utterances: &HashMap<&str, &Utterance>) -> Result<String> {
    let texts = dialogue
        .member_utt_ids
        .iter()
        .map(|id| {
            utterances
                .get(id.as_str())
                .map(|u| u.text.as_str())
                .ok_or_else(|| Error::MissingUtterance(id.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(join_texts(texts))
}
