use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use newsgauge_core::analytics::DisparityMode;
use newsgauge_core::annotator::{ClassifyConfig, ClientConfig};
use newsgauge_core::assembler::AssemblyConfig;
use newsgauge_core::ingest::{AnnotationColumns, GenderColumns, GroupBy};
use newsgauge_core::metrics::EvalParams;
use serde::{Deserialize, Serialize};

/// Input and output locations. Relative paths resolve against the config
/// file's directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub taxonomy: Option<PathBuf>,
    pub channels: Option<PathBuf>,
    pub fewshot: Option<PathBuf>,
    pub transcripts: Option<PathBuf>,
    pub utterances: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub gender_spans: Option<PathBuf>,
    pub gender_offsets: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

impl Paths {
    fn resolve(&mut self, base: &Path) {
        for p in [
            &mut self.taxonomy,
            &mut self.channels,
            &mut self.fewshot,
            &mut self.transcripts,
            &mut self.utterances,
            &mut self.predictions,
            &mut self.annotations,
            &mut self.gender_spans,
            &mut self.gender_offsets,
            &mut self.out_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    /// Chat-completion endpoint prompted with few-shot examples.
    #[default]
    Chat,
    /// Batch classifier speaking `POST /classify`.
    Classify,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Subset {
    #[default]
    All,
    Dev,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub bootstrap: usize,
    pub confidence: f64,
    pub seed: u64,
    pub subset: Subset,
    pub test_fraction: f64,
}

impl Default for EvalSection {
    fn default() -> Self {
        let p = EvalParams::default();
        EvalSection {
            bootstrap: p.bootstrap,
            confidence: p.confidence,
            seed: p.seed,
            subset: Subset::All,
            test_fraction: 0.7525,
        }
    }
}

impl EvalSection {
    pub fn params(&self) -> EvalParams {
        EvalParams {
            bootstrap: self.bootstrap,
            confidence: self.confidence,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    pub group_by: GroupBy,
    pub disparity_mode: DisparityMode,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub jobs: Option<usize>,
    pub transcript_format: Option<String>,
    pub protocol: Protocol,
    pub paths: Paths,
    pub assembly: AssemblyConfig,
    pub client: ClientConfig,
    pub classify: ClassifyConfig,
    pub eval: EvalSection,
    pub analysis: AnalysisSection,
    pub annotation_columns: AnnotationColumns,
    pub gender_columns: GenderColumns,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        if let Some(base) = path.parent() {
            cfg.paths.resolve(base);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.assembly.validate()?;
        self.client.validate()?;
        if self.classify.batch_size == 0 {
            bail!("classify.batch_size must be >= 1");
        }
        let p = &self.eval;
        if !(p.confidence > 0.0 && p.confidence < 1.0) {
            bail!("eval.confidence must be in (0, 1), got {}", p.confidence);
        }
        if !(self.eval.test_fraction > 0.0 && self.eval.test_fraction < 1.0) {
            bail!("eval.test_fraction must be in (0, 1), got {}", self.eval.test_fraction);
        }
        if self.jobs == Some(0) {
            bail!("jobs must be >= 1");
        }
        Ok(())
    }
}

/// Per-media time offsets: `{"media_id": seconds, ...}`.
pub fn load_offsets(path: &Path) -> anyhow::Result<HashMap<String, f64>> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_slice(&bytes).with_context(|| format!("parsing offsets {}", path.display()))
}
