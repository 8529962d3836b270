use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{Protocol, Subset};

#[derive(Debug, Parser)]
#[command(name = "newsgauge", version, about = "Broadcast news topic labeling, evaluation and gender speaking-time analytics")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads for CPU-bound stages.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Taxonomy JSON replacing the built-in one.
    #[arg(long, global = true)]
    pub taxonomy: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize raw transcripts into utterance JSONL.
    Ingest(IngestArgs),
    /// Group utterances into dialogues.
    Assemble(AssembleArgs),
    /// Label dialogues with a chat model or a batch classifier.
    Annotate(AnnotateArgs),
    /// Write the teacher-labeled training set.
    ExportTrain(ExportTrainArgs),
    /// Score predictions against double-annotated gold.
    Evaluate(EvaluateArgs),
    /// Inter-annotator agreement per topic.
    Agreement(AgreementArgs),
    /// Gender speaking time per topic.
    Analyze(AnalyzeArgs),
    /// Combine stage results into the report directory.
    Report(ReportArgs),
    /// Run every stage from transcripts to report.
    Pipeline(PipelineArgs),
    /// Serve canned chat and classification responses for offline runs.
    MockServer(MockServerArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// utterance_jsonl or asr_segments_json.
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AssembleArgs {
    /// Utterance JSONL.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub max_gap: Option<f64>,
    #[arg(long)]
    pub max_total: Option<f64>,
    /// speech_sum or span.
    #[arg(long)]
    pub duration_mode: Option<String>,
}

#[derive(Debug, Args)]
pub struct AnnotateArgs {
    #[arg(long)]
    pub dialogues: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub protocol: Option<Protocol>,
    /// Few-shot examples JSON (chat protocol).
    #[arg(long)]
    pub fewshot: Option<PathBuf>,
    /// Base URL of the inference service.
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub max_in_flight: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExportTrainArgs {
    /// Chat annotation JSONL written by `annotate`.
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long)]
    pub dialogues: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalFlags {
    #[arg(long)]
    pub bootstrap: Option<usize>,
    #[arg(long)]
    pub confidence: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub subset: Option<Subset>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Human annotation CSV, two annotators per dialogue.
    #[arg(long)]
    pub gold: PathBuf,
    /// Prediction JSONL (`dialogue_id`, `labels`).
    #[arg(long, conflicts_with = "classifier_url")]
    pub pred: Option<PathBuf>,
    /// Score a classification service instead of a prediction file.
    #[arg(long, requires = "dialogues")]
    pub classifier_url: Option<String>,
    /// Dialogue JSONL supplying texts for the classifier.
    #[arg(long)]
    pub dialogues: Option<PathBuf>,
    #[command(flatten)]
    pub eval: EvalFlags,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AgreementArgs {
    #[arg(long)]
    pub annotations: PathBuf,
    /// Dialogue JSONL supplying speech durations.
    #[arg(long)]
    pub dialogues: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub dialogues: PathBuf,
    #[arg(long)]
    pub utterances: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    /// Directory of segmenter tables, one per media file named `<media_id>.csv`.
    #[arg(long)]
    pub gender_spans: PathBuf,
    #[arg(long)]
    pub channels: Option<PathBuf>,
    /// JSON map of media id to time offset in seconds.
    #[arg(long)]
    pub offsets: Option<PathBuf>,
    /// none, ownership, medium or channel.
    #[arg(long)]
    pub group_by: Option<String>,
    /// parity or distribution.
    #[arg(long)]
    pub disparity_mode: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// `evaluation.json` from `evaluate`.
    #[arg(long)]
    pub evaluation: Option<PathBuf>,
    /// `agreement.json` from `agreement`.
    #[arg(long)]
    pub agreement: Option<PathBuf>,
    /// `analysis.json` from `analyze`.
    #[arg(long)]
    pub analysis: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long, conflicts_with = "utterances")]
    pub transcripts: Option<PathBuf>,
    #[arg(long)]
    pub transcript_format: Option<String>,
    #[arg(long)]
    pub utterances: Option<PathBuf>,
    /// Existing prediction JSONL; skips annotation.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Human annotation CSV for evaluation and agreement.
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    #[arg(long)]
    pub gender_spans: Option<PathBuf>,
    #[arg(long)]
    pub channels: Option<PathBuf>,
    #[arg(long)]
    pub fewshot: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub protocol: Option<Protocol>,
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub group_by: Option<String>,
    #[command(flatten)]
    pub eval: EvalFlags,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MockServerArgs {
    #[arg(long, default_value = "127.0.0.1:8089")]
    pub addr: String,
    /// Mock configuration JSON (rules, scripted failures, delay).
    #[arg(long)]
    pub rules: Option<PathBuf>,
}
