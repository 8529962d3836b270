//! CSV and JSON outputs of a run plus the run manifest.
//!
//! Everything except `run_manifest.json` is a pure function of the results,
//! so identical inputs give byte-identical tables and summary.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::analytics::{AnalysisReport, GroupAnalysis};
use crate::error::{Error, Result};
use crate::metrics::{AgreementResult, EvaluationReport};

pub const PARITY_CSV: &str = "parity_by_topic.csv";
pub const DISTRIBUTION_CSV: &str = "distribution_by_gender.csv";
pub const DISPARITY_CSV: &str = "disparity_by_topic.csv";
pub const AGREEMENT_CSV: &str = "agreement_by_topic.csv";
pub const SCORES_CSV: &str = "scores_by_topic.csv";
pub const SCORES_JSON: &str = "scores.json";
pub const MANIFEST_JSON: &str = "run_manifest.json";

/// Fixed four-decimal cell; missing values are empty.
pub fn fmt4(v: Option<f64>) -> String {
    match v {
        Some(x) => {
            let s = format!("{x:.4}");
            if s == "-0.0000" {
                "0.0000".into()
            } else {
                s
            }
        }
        None => String::new(),
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the canonical JSON form of a config (object keys sorted).
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let value = serde_json::to_value(config)?;
    Ok(sha256_hex(serde_json::to_string(&value)?.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub name: String,
    pub path: PathBuf,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub taxonomy_fingerprint: String,
    pub started_at: String,
    pub finished_at: Option<String>,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn start<T: Serialize>(
        command: &str,
        config: &T,
        seed: Option<u64>,
        taxonomy_fingerprint: String,
    ) -> Result<Self> {
        Ok(RunManifest {
            tool: "newsgauge".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_hash: config_hash(config)?,
            seed,
            taxonomy_fingerprint,
            started_at: now(),
            finished_at: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    /// Record the digest of an input file.
    pub fn add_input(&mut self, name: &str, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        self.add_input_bytes(name, path, &bytes);
        Ok(())
    }

    pub fn add_input_bytes(&mut self, name: &str, path: &Path, bytes: &[u8]) {
        self.inputs.push(InputDigest {
            name: name.into(),
            path: path.to_path_buf(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
    }
}

/// Results that feed a report. Absent parts produce header-only tables and
/// `null` summary entries.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReportInputs<'a> {
    pub evaluation: Option<&'a EvaluationReport>,
    pub agreement: Option<&'a AgreementResult>,
    pub analysis: Option<&'a AnalysisReport>,
}

/// Named CSV payloads and the JSON summary, ready to be written.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub tables: BTreeMap<&'static str, String>,
    pub summary: Value,
}

fn csv_table(header: &[&str], rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Config(format!("csv encoding: {e}"));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv encoding: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn analysis_groups(analysis: Option<&AnalysisReport>) -> Vec<&GroupAnalysis> {
    analysis
        .map(|a| a.overall.iter().chain(&a.groups).collect())
        .unwrap_or_default()
}

pub fn build_report(inputs: ReportInputs<'_>) -> Result<ReportBundle> {
    let groups = analysis_groups(inputs.analysis);
    let mut tables = BTreeMap::new();

    let mut parity_rows = Vec::new();
    let mut dist_rows = Vec::new();
    let mut disp_rows = Vec::new();
    for g in &groups {
        for t in &g.topics {
            let topic = t.topic.as_str().to_string();
            parity_rows.push(vec![
                g.group.clone(),
                topic.clone(),
                fmt4(Some(t.time.female_s())),
                fmt4(Some(t.time.male_s())),
                fmt4(t.parity),
            ]);
            dist_rows.push(vec![g.group.clone(), topic.clone(), fmt4(t.dist_female), fmt4(t.dist_male)]);
            disp_rows.push(vec![
                g.group.clone(),
                topic,
                fmt4(t.parity),
                fmt4(g.global_parity),
                fmt4(t.disparity),
            ]);
        }
    }
    tables.insert(
        PARITY_CSV,
        csv_table(&["group", "topic", "female_s", "male_s", "parity"], parity_rows)?,
    );
    tables.insert(
        DISTRIBUTION_CSV,
        csv_table(&["group", "topic", "female_share", "male_share"], dist_rows)?,
    );
    tables.insert(
        DISPARITY_CSV,
        csv_table(&["group", "topic", "parity", "global_parity", "disparity"], disp_rows)?,
    );

    let agreement_rows = inputs
        .agreement
        .map(|a| {
            a.per_topic
                .iter()
                .map(|t| {
                    vec![
                        t.topic.as_str().to_string(),
                        fmt4(t.alpha),
                        fmt4(Some(t.mass)),
                        fmt4(Some(t.mass_share)),
                        fmt4(Some(t.duration_s)),
                    ]
                })
                .collect()
        })
        .unwrap_or_default();
    tables.insert(
        AGREEMENT_CSV,
        csv_table(&["topic", "alpha", "mass", "mass_share", "duration_s"], agreement_rows)?,
    );

    let score_rows = inputs
        .evaluation
        .map(|e| {
            e.per_topic
                .iter()
                .map(|t| {
                    vec![
                        t.topic.as_str().to_string(),
                        fmt4(Some(t.scores.precision)),
                        fmt4(Some(t.scores.recall)),
                        fmt4(Some(t.scores.f1)),
                        fmt4(Some(t.counts.tp)),
                        fmt4(Some(t.counts.fp)),
                        fmt4(Some(t.counts.fn_)),
                        fmt4(Some(t.counts.tn)),
                    ]
                })
                .collect()
        })
        .unwrap_or_default();
    tables.insert(
        SCORES_CSV,
        csv_table(&["topic", "precision", "recall", "f1", "tp", "fp", "fn", "tn"], score_rows)?,
    );

    let speaking_time: Vec<Value> = groups
        .iter()
        .map(|g| {
            json!({
                "group": g.group,
                "n_dialogues": g.n_dialogues,
                "female_s": g.global.female_s(),
                "male_s": g.global.male_s(),
                "global_parity": g.global_parity,
            })
        })
        .collect();
    let summary = json!({
        "evaluation": inputs.evaluation,
        "agreement": inputs.agreement.map(|a| json!({
            "n_dialogues": a.n_dialogues,
            "global_alpha": a.global_alpha,
            "total_duration_s": a.total_duration_s,
            "mean_labels_per_annotator": a.mean_labels_per_annotator,
            "dialogues_without_duration": a.dialogues_without_duration,
        })),
        "speaking_time": inputs.analysis.map(|a| json!({
            "disparity_mode": a.mode,
            "groups": speaking_time,
        })),
    });
    Ok(ReportBundle { tables, summary })
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_file(path, &bytes)
}

/// Write every table, the summary and the finished manifest into `out_dir`.
/// Returns the written paths, manifest last.
pub fn emit_report(
    bundle: &ReportBundle,
    mut manifest: RunManifest,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    for (name, body) in &bundle.tables {
        let path = out_dir.join(name);
        write_file(&path, body.as_bytes())?;
        written.push(path);
    }
    let path = out_dir.join(SCORES_JSON);
    write_json(&path, &bundle.summary)?;
    written.push(path);

    manifest.outputs = written
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    manifest.finished_at = Some(now());
    let path = out_dir.join(MANIFEST_JSON);
    write_json(&path, &manifest)?;
    written.push(path);
    Ok(written)
}
