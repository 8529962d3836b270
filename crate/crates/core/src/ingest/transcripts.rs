use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::cmp_secs;
use crate::corpus::Utterance;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TranscriptFormat {
    /// One utterance object per line.
    UtteranceJsonl,
    /// Nested ASR output: per media file, an array of `{start, end, text}`.
    AsrSegmentsJson,
}

impl FromStr for TranscriptFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "utterance_jsonl" => Ok(TranscriptFormat::UtteranceJsonl),
            "asr_segments_json" => Ok(TranscriptFormat::AsrSegmentsJson),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

/// Counters for records that did not survive ingest unchanged.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub kept: usize,
    pub dropped_empty: usize,
    pub dropped_nonpositive: usize,
    pub truncated_overlaps: usize,
}

impl IngestReport {
    pub fn dropped_count(&self) -> usize {
        self.dropped_empty + self.dropped_nonpositive
    }
}

#[derive(Deserialize)]
struct AsrMedia {
    #[serde(alias = "media_id")]
    program_id: String,
    channel_id: String,
    segments: Vec<AsrSegment>,
}

#[derive(Deserialize)]
struct AsrSegment {
    start: f64,
    end: f64,
    text: String,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AsrDocument {
    Many(Vec<AsrMedia>),
    One(AsrMedia),
}

/// Parse transcripts into utterances sorted by `(program_id, start_s)`.
///
/// Blank segments and segments with `end_s <= start_s` are dropped. When two
/// segments of the same program overlap, the earlier one is truncated to
/// end where the later one starts.
pub fn parse_transcripts(
    bytes: &[u8],
    format: TranscriptFormat,
) -> Result<(Vec<Utterance>, IngestReport)> {
    let raw = match format {
        TranscriptFormat::UtteranceJsonl => parse_jsonl(bytes)?,
        TranscriptFormat::AsrSegmentsJson => parse_asr(bytes)?,
    };

    let mut report = IngestReport::default();
    let mut utterances: Vec<Utterance> = raw
        .into_iter()
        .filter(|u| {
            if u.text.trim().is_empty() {
                report.dropped_empty += 1;
                false
            } else if u.end_s.partial_cmp(&u.start_s) != Some(std::cmp::Ordering::Greater) || u.start_s < 0.0 {
                report.dropped_nonpositive += 1;
                false
            } else {
                true
            }
        })
        .collect();

    utterances.sort_by(|a, b| {
        a.program_id
            .cmp(&b.program_id)
            .then(cmp_secs(a.start_s, b.start_s))
            .then(cmp_secs(a.end_s, b.end_s))
            .then_with(|| a.utt_id.cmp(&b.utt_id))
    });

    let mut out: Vec<Utterance> = Vec::with_capacity(utterances.len());
    for u in utterances {
        if let Some(prev) = out.last_mut() {
            if prev.program_id == u.program_id && prev.end_s > u.start_s {
                prev.end_s = u.start_s;
                report.truncated_overlaps += 1;
                if prev.end_s <= prev.start_s {
                    out.pop();
                    report.dropped_nonpositive += 1;
                }
            }
        }
        out.push(u);
    }
    report.kept = out.len();
    Ok((out, report))
}

fn parse_jsonl(bytes: &[u8]) -> Result<Vec<Utterance>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
        source_name: "utterance_jsonl".into(),
        line: 0,
        column: e.valid_up_to(),
        message: "invalid UTF-8".into(),
    })?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let u: Utterance = serde_json::from_str(line).map_err(|e| Error::Parse {
            source_name: "utterance_jsonl".into(),
            line: idx + 1,
            column: e.column(),
            message: e.to_string(),
        })?;
        out.push(u);
    }
    Ok(out)
}

fn parse_asr(bytes: &[u8]) -> Result<Vec<Utterance>> {
    let doc: AsrDocument =
        serde_json::from_slice(bytes).map_err(|e| Error::parse("asr_segments_json", &e))?;
    let media = match doc {
        AsrDocument::Many(m) => m,
        AsrDocument::One(m) => vec![m],
    };
    let mut out = Vec::new();
    for m in media {
        for (i, seg) in m.segments.into_iter().enumerate() {
            out.push(Utterance {
                utt_id: format!("{}_{:05}", m.program_id, i),
                channel_id: m.channel_id.clone(),
                program_id: m.program_id.clone(),
                start_s: seg.start,
                end_s: seg.end,
                text: seg.text,
            });
        }
    }
    Ok(out)
}

/// Serialize utterances in the canonical JSONL layout.
pub fn write_utterances_jsonl(utterances: &[Utterance]) -> Result<Vec<u8>> {
    crate::jsonl::write_lines(utterances)
}
