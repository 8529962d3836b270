use std::collections::{BTreeSet, HashMap};

use newsgauge_core::analytics::{analyze, DisparityMode, TimeByGender, TopicGenderAggregate};
use newsgauge_core::corpus::{LabelSet, TopicId, TOPIC_COUNT};
use newsgauge_core::ingest::{build_gold, HumanAnnotation, Scope};
use newsgauge_core::metrics::{agreement_report, evaluate, EvalParams};
use newsgauge_core::report::{
    build_report, emit_report, fmt4, ReportInputs, RunManifest, AGREEMENT_CSV, DISPARITY_CSV,
    DISTRIBUTION_CSV, MANIFEST_JSON, PARITY_CSV, SCORES_CSV, SCORES_JSON,
};

fn annotation(dialogue: &str, annotator: &str, topics: &[TopicId]) -> HumanAnnotation {
    HumanAnnotation {
        dialogue_id: dialogue.into(),
        annotator_id: annotator.into(),
        topics: topics.iter().copied().collect(),
        scope: Scope::National,
        flag_ukraine: false,
        flag_israel_hamas: false,
        flag_mixed_subjects: false,
    }
}

fn aggregate(group: &str, seed: u64) -> TopicGenderAggregate {
    let mut per_topic = [TimeByGender::default(); TOPIC_COUNT];
    for (i, t) in per_topic.iter_mut().enumerate() {
        let k = (i as u64 + 1) * (seed + 3);
        if i % 4 != 3 {
            *t = TimeByGender::from_secs((k % 17) as f64 * 1.37, (k % 11) as f64 * 2.11);
        }
    }
    TopicGenderAggregate {
        group: Some(group.into()),
        n_dialogues: 5,
        per_topic,
        global_unique: TimeByGender::from_secs(40.0 + seed as f64, 55.5),
    }
}

struct Results {
    evaluation: newsgauge_core::metrics::EvaluationReport,
    agreement: newsgauge_core::metrics::AgreementResult,
    analysis: newsgauge_core::analytics::AnalysisReport,
}

fn results() -> Results {
    use TopicId::*;
    let ann = vec![
        annotation("d1", "a", &[Sport]),
        annotation("d1", "b", &[Sport, Weather]),
        annotation("d2", "a", &[Politics]),
        annotation("d2", "b", &[Politics]),
        annotation("d3", "a", &[Health, SocialIssue]),
        annotation("d3", "b", &[SocialIssue]),
    ];
    let gold = build_gold(&ann).unwrap();
    let pred = vec![
        LabelSet { dialogue_id: "d1".into(), topics: BTreeSet::from([Sport]) },
        LabelSet { dialogue_id: "d2".into(), topics: BTreeSet::from([Politics, EconomyBusinessFinance]) },
        LabelSet { dialogue_id: "d3".into(), topics: BTreeSet::from([Health]) },
    ];
    let evaluation = evaluate(&gold, &pred, EvalParams { bootstrap: 50, confidence: 0.95, seed: 7 }).unwrap();
    let durations = HashMap::from([("d1".to_string(), 12.5), ("d2".to_string(), 30.0)]);
    let agreement = agreement_report(&ann, &durations).unwrap();
    let analysis = analyze(&[aggregate("private", 1), aggregate("public", 2)], DisparityMode::Parity);
    Results { evaluation, agreement, analysis }
}

fn rows(csv_text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
    let header = reader.headers().unwrap().iter().map(str::to_string).collect();
    let body = reader
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect();
    (header, body)
}

fn cell(v: &str) -> Option<f64> {
    (!v.is_empty()).then(|| v.parse().unwrap())
}

fn close(got: &str, want: Option<f64>) {
    match (cell(got), want) {
        (Some(g), Some(w)) => assert!((g - w).abs() <= 5e-5 + 1e-12, "{g} vs {w}"),
        (g, w) => assert_eq!(g.is_some(), w.is_some(), "{got:?} vs {w:?}"),
    }
}

#[test]
fn tables_round_trip_to_four_decimals() {
    let r = results();
    let bundle = build_report(ReportInputs {
        evaluation: Some(&r.evaluation),
        agreement: Some(&r.agreement),
        analysis: Some(&r.analysis),
    })
    .unwrap();

    let (header, body) = rows(&bundle.tables[PARITY_CSV]);
    assert_eq!(header, ["group", "topic", "female_s", "male_s", "parity"]);
    let groups: Vec<_> = std::iter::once(r.analysis.overall.as_ref().unwrap()).chain(&r.analysis.groups).collect();
    assert_eq!(body.len(), groups.len() * TOPIC_COUNT);
    let mut it = body.iter();
    for g in &groups {
        for t in &g.topics {
            let row = it.next().unwrap();
            assert_eq!(row[0], g.group);
            assert_eq!(row[1], t.topic.as_str());
            close(&row[2], Some(t.time.female_s()));
            close(&row[3], Some(t.time.male_s()));
            close(&row[4], t.parity);
        }
    }
    assert_eq!(body[0][0], "all");

    let (_, body) = rows(&bundle.tables[DISTRIBUTION_CSV]);
    let mut it = body.iter();
    for g in &groups {
        for t in &g.topics {
            let row = it.next().unwrap();
            close(&row[2], t.dist_female);
            close(&row[3], t.dist_male);
        }
    }

    let (_, body) = rows(&bundle.tables[DISPARITY_CSV]);
    let mut it = body.iter();
    for g in &groups {
        for t in &g.topics {
            let row = it.next().unwrap();
            close(&row[3], g.global_parity);
            close(&row[4], t.disparity);
        }
    }

    let (header, body) = rows(&bundle.tables[AGREEMENT_CSV]);
    assert_eq!(header, ["topic", "alpha", "mass", "mass_share", "duration_s"]);
    for (row, t) in body.iter().zip(&r.agreement.per_topic) {
        assert_eq!(row[0], t.topic.as_str());
        close(&row[1], t.alpha);
        close(&row[2], Some(t.mass));
        close(&row[3], Some(t.mass_share));
        close(&row[4], Some(t.duration_s));
    }

    let (header, body) = rows(&bundle.tables[SCORES_CSV]);
    assert_eq!(header, ["topic", "precision", "recall", "f1", "tp", "fp", "fn", "tn"]);
    assert_eq!(body.len(), TOPIC_COUNT);
    for (row, t) in body.iter().zip(&r.evaluation.per_topic) {
        close(&row[1], Some(t.scores.precision));
        close(&row[3], Some(t.scores.f1));
        close(&row[4], Some(t.counts.tp));
        close(&row[7], Some(t.counts.tn));
    }

    let summary = &bundle.summary;
    let micro = summary["evaluation"]["micro"]["f1"].as_f64().unwrap();
    assert_eq!(micro, r.evaluation.micro.f1);
    assert_eq!(summary["agreement"]["global_alpha"].as_f64(), r.agreement.global_alpha);
    assert_eq!(summary["speaking_time"]["groups"].as_array().unwrap().len(), 3);
}

#[test]
fn emitted_reports_are_deterministic_except_manifest() {
    let r = results();
    let inputs = ReportInputs {
        evaluation: Some(&r.evaluation),
        agreement: Some(&r.agreement),
        analysis: Some(&r.analysis),
    };
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for dir in &dirs {
        let manifest = RunManifest::start("report", &"cfg", Some(7), "fp".into()).unwrap();
        let written = emit_report(&build_report(inputs).unwrap(), manifest, dir.path()).unwrap();
        assert_eq!(written.len(), 7);
        assert!(written.last().unwrap().ends_with(MANIFEST_JSON));
    }
    for name in [PARITY_CSV, DISTRIBUTION_CSV, DISPARITY_CSV, AGREEMENT_CSV, SCORES_CSV, SCORES_JSON] {
        let a = std::fs::read(dirs[0].path().join(name)).unwrap();
        let b = std::fs::read(dirs[1].path().join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dirs[0].path().join(MANIFEST_JSON)).unwrap()).unwrap();
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 6);
    assert!(manifest["finished_at"].is_string());
}

#[test]
fn missing_values_are_blank() {
    assert_eq!(fmt4(None), "");
    assert_eq!(fmt4(Some(-0.00001)), "0.0000");
    assert_eq!(fmt4(Some(2.0 / 3.0)), "0.6667");
}
