use serde::{Deserialize, Serialize};

use super::cmp_secs;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenderLabel {
    Male,
    Female,
    Music,
    Noise,
    Other,
}

impl GenderLabel {
    /// Segmenter labels. Anything unrecognized (e.g. `noEnergy`) is `Other`.
    pub fn from_segmenter(raw: &str) -> Self {
        match raw.trim().to_ascii_lowercase().as_str() {
            "male" => GenderLabel::Male,
            "female" => GenderLabel::Female,
            "music" => GenderLabel::Music,
            "noise" => GenderLabel::Noise,
            _ => GenderLabel::Other,
        }
    }

    pub fn is_speech_gender(self) -> bool {
        matches!(self, GenderLabel::Male | GenderLabel::Female)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenderSpan {
    pub media_id: String,
    pub label: GenderLabel,
    pub start_s: f64,
    pub end_s: f64,
}

/// Column names of a gender segmentation table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenderColumns {
    pub label: String,
    pub start: String,
    pub stop: String,
}

impl Default for GenderColumns {
    fn default() -> Self {
        GenderColumns {
            label: "labels".into(),
            start: "start".into(),
            stop: "stop".into(),
        }
    }
}

/// Parse a segmenter CSV (comma or tab separated, header required).
///
/// Rows come back sorted by start time. Overlapping rows are repaired by
/// truncating the earlier one.
pub fn parse_gender_spans(
    bytes: &[u8],
    media_id: &str,
    columns: &GenderColumns,
) -> Result<Vec<GenderSpan>> {
    let source_name = format!("gender spans {media_id}");
    let header_line = bytes.split(|b| *b == b'\n').next().unwrap_or_default();
    let delimiter = if header_line.contains(&b'\t') && !header_line.contains(&b',') {
        b'\t'
    } else {
        b','
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .from_reader(bytes);

    let headers = reader.headers().map_err(|e| Error::Row {
        source_name: source_name.clone(),
        row: 1,
        message: e.to_string(),
    })?;
    let find = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Row {
            source_name: source_name.clone(),
            row: 1,
            message: format!("missing column `{name}`"),
        })
    };
    let (label_col, start_col, stop_col) =
        (find(&columns.label)?, find(&columns.start)?, find(&columns.stop)?);

    let mut spans = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Row {
            source_name: source_name.clone(),
            row: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let row = record.position().map(|p| p.line()).unwrap_or(0);
        let row_err = |message: String| Error::Row {
            source_name: source_name.clone(),
            row,
            message,
        };
        let field = |i: usize| record.get(i).unwrap_or("");
        let number = |i: usize| -> Result<f64> {
            let raw = field(i);
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| row_err(format!("non-numeric time `{raw}`")))
        };
        let start_s = number(start_col)?;
        let end_s = number(stop_col)?;
        if start_s >= end_s {
            return Err(row_err(format!("start {start_s} >= stop {end_s}")));
        }
        spans.push(GenderSpan {
            media_id: media_id.to_string(),
            label: GenderLabel::from_segmenter(field(label_col)),
            start_s,
            end_s,
        });
    }

    spans.sort_by(|a, b| cmp_secs(a.start_s, b.start_s).then(cmp_secs(a.end_s, b.end_s)));
    let mut out: Vec<GenderSpan> = Vec::with_capacity(spans.len());
    for s in spans {
        if let Some(prev) = out.last_mut() {
            if prev.end_s > s.start_s {
                prev.end_s = s.start_s;
                if prev.end_s <= prev.start_s {
                    out.pop();
                }
            }
        }
        out.push(s);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(body: &str) -> Result<Vec<GenderSpan>> {
        parse_gender_spans(format!("labels,start,stop\n{body}").as_bytes(), "m", &GenderColumns::default())
    }

    #[test]
    fn female_row() {
        let spans = parse("female,0,4").unwrap();
        assert_eq!(
            spans,
            vec![GenderSpan { media_id: "m".into(), label: GenderLabel::Female, start_s: 0.0, end_s: 4.0 }]
        );
        assert!(spans[0].label.is_speech_gender());
    }

    #[test]
    fn music_row_is_not_speech_gender() {
        let spans = parse("music,4,9").unwrap();
        assert_eq!(spans[0].label, GenderLabel::Music);
        assert!(!spans[0].label.is_speech_gender());
    }

    #[test]
    fn reversed_times_are_a_row_error() {
        match parse("female,0,4\nmale,9,3").unwrap_err() {
            Error::Row { row, .. } => assert_eq!(row, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn non_numeric_time() {
        assert!(matches!(parse("male,abc,3"), Err(Error::Row { .. })));
    }

    #[test]
    fn rows_are_sorted_and_labels_preserved() {
        let spans = parse("male,5,7.5\nnoEnergy,2,5\nfemale,0,2").unwrap();
        let labels: Vec<_> = spans.iter().map(|s| s.label).collect();
        assert_eq!(labels, vec![GenderLabel::Female, GenderLabel::Other, GenderLabel::Male]);
        assert_eq!(spans[2].end_s, 7.5);
    }

    #[test]
    fn tab_separated_with_custom_columns() {
        let cols = GenderColumns { label: "gender".into(), start: "t0".into(), stop: "t1".into() };
        let spans = parse_gender_spans(b"gender\tt0\tt1\nfemale\t1.5\t2.0\n", "m", &cols).unwrap();
        assert_eq!(spans[0].start_s, 1.5);
    }

    #[test]
    fn overlapping_rows_are_truncated() {
        let spans = parse("female,0,5\nmale,4,8").unwrap();
        assert_eq!(spans[0].end_s, 4.0);
    }
}
