//! JSON Lines helpers used by every file-based stage.

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::corpus::LabelSet;
use crate::error::{Error, Result};

/// Parse one record per non-blank line; errors carry the 1-based line number.
pub fn parse_lines<T: DeserializeOwned>(bytes: &[u8], source_name: &str) -> Result<Vec<T>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
        source_name: source_name.to_string(),
        line: 0,
        column: e.valid_up_to(),
        message: "invalid UTF-8".into(),
    })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                source_name: source_name.to_string(),
                line: i + 1,
                column: e.column(),
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn write_lines<T: Serialize>(records: &[T]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r)?;
        buf.push(b'\n');
    }
    Ok(buf)
}

/// Read `{dialogue_id, labels}` lines. Extra fields are ignored, so
/// annotation output, training sets and plain prediction files all work.
pub fn read_label_sets(bytes: &[u8], source_name: &str) -> Result<Vec<LabelSet>> {
    let sets: Vec<LabelSet> = parse_lines(bytes, source_name)?;
    for s in &sets {
        if s.topics.is_empty() {
            return Err(Error::MissingLabels(s.dialogue_id.clone()));
        }
    }
    Ok(sets)
}
