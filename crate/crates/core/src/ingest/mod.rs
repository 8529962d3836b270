//! Parsers for every external input: transcripts, gender segmentations, human
//! annotations and the channel registry.

mod annotations;
mod channels;
mod gender;
mod transcripts;

pub use annotations::{
    build_gold, load_annotations, pair_annotations, AnnotationColumns, GoldMass, HumanAnnotation,
    Scope,
};
pub use channels::{ChannelRegistry, GroupBy, UNKNOWN_GROUP};
pub use gender::{parse_gender_spans, GenderColumns, GenderLabel, GenderSpan};
pub use transcripts::{
    parse_transcripts, write_utterances_jsonl, IngestReport, TranscriptFormat,
};

/// Sort key helper: total order on seconds.
pub(crate) fn cmp_secs(a: f64, b: f64) -> std::cmp::Ordering {
    a.total_cmp(&b)
}
