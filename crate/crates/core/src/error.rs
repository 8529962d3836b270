use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid taxonomy: {0}")]
    Taxonomy(String),

    #[error("{source_name}: parse error at line {line}, column {column}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{source_name}: row {row}: {message}")]
    Row {
        source_name: String,
        row: u64,
        message: String,
    },

    #[error("unknown transcript format `{0}` (expected utterance_jsonl or asr_segments_json)")]
    UnknownFormat(String),

    #[error("dialogue {dialogue_id}: unknown topic `{value}`")]
    UnknownTopic { dialogue_id: String, value: String },

    #[error("dialogue {dialogue_id}: expected exactly 2 annotations, found {count}")]
    AnnotatorCount { dialogue_id: String, count: usize },

    #[error("duplicate channel_id `{0}` in registry")]
    DuplicateChannel(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("assembly input for program {program_id}: {message}")]
    Assembly { program_id: String, message: String },

    #[error("unresolvable utterance id `{0}`")]
    MissingUtterance(String),

    #[error("invalid few-shot set: {0}")]
    FewShot(String),

    #[error("empty dialogue text for {0}")]
    EmptyText(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error(
        "gold/prediction id mismatch: {} missing from predictions {:?}, {} missing from gold {:?}",
        missing_in_pred.len(), missing_in_pred, missing_in_gold.len(), missing_in_gold
    )]
    IdMismatch {
        missing_in_pred: Vec<String>,
        missing_in_gold: Vec<String>,
    },

    #[error("dialogue {0} has no label set")]
    MissingLabels(String),

    #[error("dialogue {0} has no text")]
    MissingDialogue(String),

    #[error("no gendered speech for {0}")]
    NoGenderedSpeech(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(source_name: &str, err: &serde_json::Error) -> Self {
        Error::Parse {
            source_name: source_name.to_string(),
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}
