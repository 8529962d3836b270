use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use newsgauge_core::analytics::{analyze, topic_gender_aggregate, AnalysisReport, GenderIndex};
use newsgauge_core::annotator::{
    annotate_batch, export_training_set, load_fewshot, mock, ClassifyClient, SyntheticAnnotation,
};
use newsgauge_core::assembler::{assemble_corpus, DurationMode};
use newsgauge_core::corpus::{Dialogue, LabelSet, Taxonomy, Utterance};
use newsgauge_core::ingest::{
    build_gold, load_annotations, parse_gender_spans, parse_transcripts, ChannelRegistry,
    GenderSpan, HumanAnnotation, TranscriptFormat,
};
use newsgauge_core::jsonl::{parse_lines, read_label_sets, write_lines};
use newsgauge_core::metrics::{agreement_report, evaluate, split_dataset, AgreementResult, EvaluationReport};
use newsgauge_core::report::{self, build_report, emit_report, write_json, ReportInputs, RunManifest};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use tracing::{info, warn};

use crate::args::*;
use crate::config::{load_offsets, Protocol, RunConfig, Subset};

pub fn dispatch(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if cli.jobs.is_some() {
        cfg.jobs = cli.jobs;
    }
    if cli.taxonomy.is_some() {
        cfg.paths.taxonomy = cli.taxonomy;
    }
    apply_overrides(&cli.command, &mut cfg)?;
    cfg.validate()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.unwrap_or(0))
        .build()
        .context("building worker pool")?;
    pool.install(|| match cli.command {
        Command::Ingest(a) => ingest(&a, &cfg),
        Command::Assemble(a) => assemble(&a, &cfg),
        Command::Annotate(a) => annotate(&a, &cfg),
        Command::ExportTrain(a) => export_train(&a),
        Command::Evaluate(a) => evaluate_cmd(&a, &cfg),
        Command::Agreement(a) => agreement(&a, &cfg),
        Command::Analyze(a) => analyze_cmd(&a, &cfg),
        Command::Report(a) => report_cmd(&a, &cfg),
        Command::Pipeline(_) => pipeline(&cfg),
        Command::MockServer(a) => mock_server(&a),
    })
}

fn parse_duration_mode(s: &str) -> Result<DurationMode> {
    match s {
        "speech_sum" => Ok(DurationMode::SpeechSum),
        "span" => Ok(DurationMode::Span),
        other => bail!("unknown duration mode `{other}` (expected speech_sum or span)"),
    }
}

fn apply_eval_flags(f: &EvalFlags, cfg: &mut RunConfig) {
    if let Some(v) = f.bootstrap {
        cfg.eval.bootstrap = v;
    }
    if let Some(v) = f.confidence {
        cfg.eval.confidence = v;
    }
    if let Some(v) = f.seed {
        cfg.eval.seed = v;
    }
    if let Some(v) = f.subset {
        cfg.eval.subset = v;
    }
    if let Some(v) = f.test_fraction {
        cfg.eval.test_fraction = v;
    }
}

fn apply_overrides(command: &Command, cfg: &mut RunConfig) -> Result<()> {
    match command {
        Command::Ingest(a) => {
            if a.format.is_some() {
                cfg.transcript_format = a.format.clone();
            }
        }
        Command::Assemble(a) => {
            if let Some(v) = a.max_gap {
                cfg.assembly.max_gap_s = v;
            }
            if let Some(v) = a.max_total {
                cfg.assembly.max_total_s = v;
            }
            if let Some(v) = &a.duration_mode {
                cfg.assembly.duration_mode = parse_duration_mode(v)?;
            }
        }
        Command::Annotate(a) => {
            if let Some(v) = a.protocol {
                cfg.protocol = v;
            }
            if a.fewshot.is_some() {
                cfg.paths.fewshot = a.fewshot.clone();
            }
            if let Some(v) = &a.endpoint {
                cfg.client.endpoint_url = v.clone();
                cfg.classify.endpoint_url = v.clone();
            }
            if let Some(v) = &a.model {
                cfg.client.model = v.clone();
            }
            if let Some(v) = a.max_in_flight {
                cfg.client.max_in_flight = v;
            }
        }
        Command::Evaluate(a) => apply_eval_flags(&a.eval, cfg),
        Command::Analyze(a) => {
            if a.channels.is_some() {
                cfg.paths.channels = a.channels.clone();
            }
            if a.offsets.is_some() {
                cfg.paths.gender_offsets = a.offsets.clone();
            }
            if let Some(v) = &a.group_by {
                cfg.analysis.group_by = v.parse()?;
            }
            if let Some(v) = &a.disparity_mode {
                cfg.analysis.disparity_mode = v.parse()?;
            }
        }
        Command::Pipeline(a) => {
            let p = &mut cfg.paths;
            for (dst, src) in [
                (&mut p.transcripts, &a.transcripts),
                (&mut p.utterances, &a.utterances),
                (&mut p.predictions, &a.predictions),
                (&mut p.annotations, &a.annotations),
                (&mut p.gender_spans, &a.gender_spans),
                (&mut p.channels, &a.channels),
                (&mut p.fewshot, &a.fewshot),
                (&mut p.out_dir, &a.out),
            ] {
                if src.is_some() {
                    *dst = src.clone();
                }
            }
            if a.transcripts.is_some() {
                p.utterances = None;
            }
            if a.utterances.is_some() {
                p.transcripts = None;
            }
            if a.transcript_format.is_some() {
                cfg.transcript_format = a.transcript_format.clone();
            }
            if let Some(v) = a.protocol {
                cfg.protocol = v;
            }
            if let Some(v) = &a.endpoint {
                cfg.client.endpoint_url = v.clone();
                cfg.classify.endpoint_url = v.clone();
            }
            if let Some(v) = &a.group_by {
                cfg.analysis.group_by = v.parse()?;
            }
            apply_eval_flags(&a.eval, cfg);
        }
        Command::ExportTrain(_) | Command::Agreement(_) | Command::Report(_) | Command::MockServer(_) => {}
    }
    Ok(())
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let name = path.display().to_string();
    Ok(parse_lines(&read(path)?, &name)?)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_slice(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn load_taxonomy(cfg: &RunConfig) -> Result<Taxonomy> {
    match &cfg.paths.taxonomy {
        Some(p) => Taxonomy::from_json(&read(p)?).with_context(|| format!("taxonomy {}", p.display())),
        None => Ok(Taxonomy::builtin()),
    }
}

fn load_registry(path: Option<&PathBuf>) -> Result<ChannelRegistry> {
    match path {
        Some(p) => ChannelRegistry::from_json(&read(p)?).with_context(|| format!("channels {}", p.display())),
        None => Ok(ChannelRegistry::default()),
    }
}

fn runtime() -> Result<tokio::runtime::Runtime> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .context("starting async runtime")
}

fn transcript_format(cfg: &RunConfig, input: &Path) -> Result<TranscriptFormat> {
    if let Some(f) = &cfg.transcript_format {
        return Ok(f.parse()?);
    }
    match input.extension().and_then(|e| e.to_str()) {
        Some("jsonl") => Ok(TranscriptFormat::UtteranceJsonl),
        Some("json") => Ok(TranscriptFormat::AsrSegmentsJson),
        _ => bail!(
            "cannot infer transcript format of {}; pass --format utterance_jsonl or asr_segments_json",
            input.display()
        ),
    }
}

fn load_utterances(cfg: &RunConfig, input: &Path) -> Result<Vec<Utterance>> {
    let format = transcript_format(cfg, input)?;
    let (utterances, rep) =
        parse_transcripts(&read(input)?, format).with_context(|| format!("transcripts {}", input.display()))?;
    info!(
        kept = rep.kept,
        dropped = rep.dropped_count(),
        truncated_overlaps = rep.truncated_overlaps,
        "ingested {}",
        input.display()
    );
    Ok(utterances)
}

fn ingest(a: &IngestArgs, cfg: &RunConfig) -> Result<()> {
    let utterances = load_utterances(cfg, &a.input)?;
    write(&a.out, &write_lines(&utterances)?)
}

fn assemble(a: &AssembleArgs, cfg: &RunConfig) -> Result<()> {
    let utterances: Vec<Utterance> = read_jsonl(&a.input)?;
    let dialogues = assemble_corpus(&utterances, &cfg.assembly)?;
    info!(utterances = utterances.len(), dialogues = dialogues.len(), "assembled");
    write(&a.out, &write_lines(&dialogues)?)
}

enum Annotated {
    Chat(Vec<SyntheticAnnotation>),
    Classified(Vec<LabelSet>),
}

impl Annotated {
    fn label_sets(&self) -> Vec<LabelSet> {
        match self {
            Annotated::Chat(a) => a.iter().map(SyntheticAnnotation::label_set).collect(),
            Annotated::Classified(l) => l.clone(),
        }
    }

    fn to_jsonl(&self) -> Result<Vec<u8>> {
        Ok(match self {
            Annotated::Chat(a) => write_lines(a)?,
            Annotated::Classified(l) => write_lines(l)?,
        })
    }
}

fn run_annotation(cfg: &RunConfig, taxonomy: &Taxonomy, dialogues: &[Dialogue]) -> Result<Annotated> {
    let rt = runtime()?;
    match cfg.protocol {
        Protocol::Chat => {
            let path = cfg
                .paths
                .fewshot
                .as_ref()
                .context("chat annotation needs few-shot examples (--fewshot or paths.fewshot)")?;
            let fewshot =
                load_fewshot(&read(path)?, taxonomy).with_context(|| format!("few-shot {}", path.display()))?;
            let client = cfg.client.clone().with_env_api_key();
            let (annotations, _) = rt.block_on(annotate_batch(dialogues, taxonomy, &fewshot, &client))?;
            Ok(Annotated::Chat(annotations))
        }
        Protocol::Classify => {
            let client = ClassifyClient::new(cfg.classify.clone())?;
            let labels = rt.block_on(async {
                client.check_health(taxonomy).await?;
                client.classify_dialogues(dialogues, taxonomy).await
            })?;
            Ok(Annotated::Classified(labels))
        }
    }
}

fn annotate(a: &AnnotateArgs, cfg: &RunConfig) -> Result<()> {
    let taxonomy = load_taxonomy(cfg)?;
    let dialogues: Vec<Dialogue> = read_jsonl(&a.dialogues)?;
    let annotated = run_annotation(cfg, &taxonomy, &dialogues)?;
    write(&a.out, &annotated.to_jsonl()?)
}

fn export_train(a: &ExportTrainArgs) -> Result<()> {
    let annotations: Vec<SyntheticAnnotation> = read_jsonl(&a.annotations)?;
    let dialogues: Vec<Dialogue> = read_jsonl(&a.dialogues)?;
    write(&a.out, &export_training_set(&annotations, &dialogues)?)
}

fn load_human(cfg: &RunConfig, taxonomy: &Taxonomy, path: &Path) -> Result<Vec<HumanAnnotation>> {
    load_annotations(&read(path)?, taxonomy, &cfg.annotation_columns)
        .with_context(|| format!("annotations {}", path.display()))
}

/// Score predictions on the configured subset of the gold dialogues.
/// Predictions for dialogues outside that subset are ignored.
fn run_evaluation(
    cfg: &RunConfig,
    human: &[HumanAnnotation],
    predictions: Vec<LabelSet>,
) -> Result<EvaluationReport> {
    let mut gold = build_gold(human)?;
    if cfg.eval.subset != Subset::All {
        let ids: Vec<String> = gold.iter().map(|g| g.dialogue_id.clone()).collect();
        let (dev, test) = split_dataset(&ids, cfg.eval.test_fraction, cfg.eval.seed)?;
        let keep: BTreeSet<String> = match cfg.eval.subset {
            Subset::Dev => dev.into_iter().collect(),
            _ => test.into_iter().collect(),
        };
        gold.retain(|g| keep.contains(&g.dialogue_id));
    }
    let wanted: BTreeSet<&str> = gold.iter().map(|g| g.dialogue_id.as_str()).collect();
    let total = predictions.len();
    let preds: Vec<LabelSet> = predictions
        .into_iter()
        .filter(|p| wanted.contains(p.dialogue_id.as_str()))
        .collect();
    if preds.len() < total {
        info!(ignored = total - preds.len(), "predictions outside the evaluated subset ignored");
    }
    let report = evaluate(&gold, &preds, cfg.eval.params())?;
    info!(
        dialogues = report.n_dialogues,
        micro_f1 = report.micro.f1,
        macro_f1 = report.macro_.f1,
        "evaluated"
    );
    Ok(report)
}

fn write_tables(inputs: ReportInputs<'_>, names: &[&str], out: &Path) -> Result<()> {
    let bundle = build_report(inputs)?;
    for name in names {
        write(&out.join(name), bundle.tables[name].as_bytes())?;
    }
    Ok(())
}

fn evaluate_cmd(a: &EvaluateArgs, cfg: &RunConfig) -> Result<()> {
    let taxonomy = load_taxonomy(cfg)?;
    let human = load_human(cfg, &taxonomy, &a.gold)?;
    let predictions = match (&a.pred, &a.classifier_url) {
        (Some(p), _) => read_label_sets(&read(p)?, &p.display().to_string())?,
        (None, Some(url)) => {
            let dialogues_path = a.dialogues.as_ref().context("--classifier-url needs --dialogues")?;
            let gold_ids: BTreeSet<&str> = human.iter().map(|h| h.dialogue_id.as_str()).collect();
            let dialogues: Vec<Dialogue> = read_jsonl::<Dialogue>(dialogues_path)?
                .into_iter()
                .filter(|d| gold_ids.contains(d.dialogue_id.as_str()))
                .collect();
            let mut classify = cfg.classify.clone();
            classify.endpoint_url = url.clone();
            let client = ClassifyClient::new(classify)?;
            runtime()?.block_on(async {
                client.check_health(&taxonomy).await?;
                client.classify_dialogues(&dialogues, &taxonomy).await
            })?
        }
        (None, None) => bail!("evaluate needs --pred or --classifier-url"),
    };
    let report = run_evaluation(cfg, &human, predictions)?;
    create_dir(&a.out)?;
    write_json(&a.out.join("evaluation.json"), &report)?;
    write_tables(
        ReportInputs { evaluation: Some(&report), ..Default::default() },
        &[report::SCORES_CSV],
        &a.out,
    )
}

fn durations_of(dialogues: &[Dialogue]) -> HashMap<String, f64> {
    dialogues
        .iter()
        .map(|d| (d.dialogue_id.clone(), d.speech_duration_s))
        .collect()
}

fn run_agreement(human: &[HumanAnnotation], dialogues: &[Dialogue]) -> Result<AgreementResult> {
    let result = agreement_report(human, &durations_of(dialogues))?;
    if result.dialogues_without_duration > 0 {
        warn!(
            count = result.dialogues_without_duration,
            "annotated dialogues without speech duration counted as 0 s"
        );
    }
    info!(dialogues = result.n_dialogues, global_alpha = ?result.global_alpha, "agreement computed");
    Ok(result)
}

fn agreement(a: &AgreementArgs, cfg: &RunConfig) -> Result<()> {
    let taxonomy = load_taxonomy(cfg)?;
    let human = load_human(cfg, &taxonomy, &a.annotations)?;
    let dialogues: Vec<Dialogue> = match &a.dialogues {
        Some(p) => read_jsonl(p)?,
        None => Vec::new(),
    };
    let result = run_agreement(&human, &dialogues)?;
    create_dir(&a.out)?;
    write_json(&a.out.join("agreement.json"), &result)?;
    write_tables(
        ReportInputs { agreement: Some(&result), ..Default::default() },
        &[report::AGREEMENT_CSV],
        &a.out,
    )
}

/// Segmenter tables in `dir`, one file per media id (the file stem).
fn gender_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry.with_context(|| format!("reading {}", dir.display()))?.path();
        if path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn load_gender_spans(cfg: &RunConfig, files: &[PathBuf]) -> Result<Vec<GenderSpan>> {
    let per_file = files
        .par_iter()
        .map(|p| {
            let media_id = p
                .file_stem()
                .and_then(|s| s.to_str())
                .with_context(|| format!("media id from {}", p.display()))?;
            parse_gender_spans(&read(p)?, media_id, &cfg.gender_columns)
                .with_context(|| format!("gender spans {}", p.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_file.into_iter().flatten().collect())
}

fn run_analysis(
    cfg: &RunConfig,
    dialogues: &[Dialogue],
    utterances: &[Utterance],
    labels: &[LabelSet],
    gender_files: &[PathBuf],
) -> Result<AnalysisReport> {
    let mut index = GenderIndex::new(load_gender_spans(cfg, gender_files)?);
    if let Some(p) = &cfg.paths.gender_offsets {
        index = index.with_offsets(load_offsets(p)?);
    }
    let registry = load_registry(cfg.paths.channels.as_ref())?;
    let aggregates = topic_gender_aggregate(
        dialogues,
        utterances,
        labels,
        &index,
        &registry,
        cfg.analysis.group_by,
    )?;
    let result = analyze(&aggregates, cfg.analysis.disparity_mode);
    if let Some(o) = &result.overall {
        info!(
            dialogues = o.n_dialogues,
            media = index.media_count(),
            global_parity = ?o.global_parity,
            "speaking time analyzed"
        );
    }
    Ok(result)
}

fn analyze_cmd(a: &AnalyzeArgs, cfg: &RunConfig) -> Result<()> {
    let dialogues: Vec<Dialogue> = read_jsonl(&a.dialogues)?;
    let utterances: Vec<Utterance> = read_jsonl(&a.utterances)?;
    let labels = read_label_sets(&read(&a.labels)?, &a.labels.display().to_string())?;
    let files = gender_files(&a.gender_spans)?;
    let result = run_analysis(cfg, &dialogues, &utterances, &labels, &files)?;
    create_dir(&a.out)?;
    write_json(&a.out.join("analysis.json"), &result)?;
    write_tables(
        ReportInputs { analysis: Some(&result), ..Default::default() },
        &[report::PARITY_CSV, report::DISTRIBUTION_CSV, report::DISPARITY_CSV],
        &a.out,
    )
}

fn report_cmd(a: &ReportArgs, cfg: &RunConfig) -> Result<()> {
    let taxonomy = load_taxonomy(cfg)?;
    let mut manifest = RunManifest::start("report", cfg, None, taxonomy.fingerprint())?;
    let evaluation: Option<EvaluationReport> = a.evaluation.as_deref().map(read_json).transpose()?;
    let agreement: Option<AgreementResult> = a.agreement.as_deref().map(read_json).transpose()?;
    let analysis: Option<AnalysisReport> = a.analysis.as_deref().map(read_json).transpose()?;
    for (name, path) in [("evaluation", &a.evaluation), ("agreement", &a.agreement), ("analysis", &a.analysis)] {
        if let Some(p) = path {
            manifest.add_input(name, p)?;
        }
    }
    let bundle = build_report(ReportInputs {
        evaluation: evaluation.as_ref(),
        agreement: agreement.as_ref(),
        analysis: analysis.as_ref(),
    })?;
    emit_report(&bundle, manifest, &a.out)?;
    info!(out = %a.out.display(), "report written");
    Ok(())
}

fn pipeline(cfg: &RunConfig) -> Result<()> {
    let p = &cfg.paths;
    let out = p.out_dir.clone().context("pipeline needs --out or paths.out_dir")?;
    let work = out.join("work");
    create_dir(&work)?;
    let taxonomy = load_taxonomy(cfg)?;
    let mut manifest = RunManifest::start("pipeline", cfg, Some(cfg.eval.seed), taxonomy.fingerprint())?;

    let utterances: Vec<Utterance> = match (&p.utterances, &p.transcripts) {
        (Some(u), _) => {
            manifest.add_input("utterances", u)?;
            read_jsonl(u)?
        }
        (None, Some(t)) => {
            manifest.add_input("transcripts", t)?;
            load_utterances(cfg, t)?
        }
        (None, None) => bail!("pipeline needs --transcripts or --utterances"),
    };
    write(&work.join("utterances.jsonl"), &write_lines(&utterances)?)?;

    let dialogues = assemble_corpus(&utterances, &cfg.assembly)?;
    info!(utterances = utterances.len(), dialogues = dialogues.len(), "assembled");
    write(&work.join("dialogues.jsonl"), &write_lines(&dialogues)?)?;

    let labels = match &p.predictions {
        Some(path) => {
            manifest.add_input("predictions", path)?;
            read_label_sets(&read(path)?, &path.display().to_string())?
        }
        None => {
            if let Some(f) = &p.fewshot {
                manifest.add_input("fewshot", f)?;
            }
            let annotated = run_annotation(cfg, &taxonomy, &dialogues)?;
            write(&work.join("annotations.jsonl"), &annotated.to_jsonl()?)?;
            if let Annotated::Chat(a) = &annotated {
                if !a.is_empty() {
                    write(&work.join("train.jsonl"), &export_training_set(a, &dialogues)?)?;
                }
            }
            annotated.label_sets()
        }
    };

    let (evaluation, agreement) = match &p.annotations {
        Some(path) => {
            manifest.add_input("annotations", path)?;
            let human = load_human(cfg, &taxonomy, path)?;
            (Some(run_evaluation(cfg, &human, labels.clone())?), Some(run_agreement(&human, &dialogues)?))
        }
        None => (None, None),
    };

    let analysis = match &p.gender_spans {
        Some(dir) => {
            let files = gender_files(dir)?;
            for f in &files {
                let name = format!("gender:{}", f.file_name().map(|n| n.to_string_lossy()).unwrap_or_default());
                manifest.add_input(&name, f)?;
            }
            if let Some(c) = &p.channels {
                manifest.add_input("channels", c)?;
            }
            Some(run_analysis(cfg, &dialogues, &utterances, &labels, &files)?)
        }
        None => None,
    };

    let bundle = build_report(ReportInputs {
        evaluation: evaluation.as_ref(),
        agreement: agreement.as_ref(),
        analysis: analysis.as_ref(),
    })?;
    emit_report(&bundle, manifest, &out)?;
    info!(out = %out.display(), "pipeline finished");
    Ok(())
}

fn mock_server(a: &MockServerArgs) -> Result<()> {
    let config = match &a.rules {
        Some(p) => mock::MockConfig::from_json(&read(p)?).with_context(|| format!("mock rules {}", p.display()))?,
        None => mock::MockConfig::default(),
    };
    mock::MockServer::serve_forever(&a.addr, config).with_context(|| format!("binding {}", a.addr))
}
