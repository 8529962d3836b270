//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any fails.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{anyhow, ensure, Context, Result};
use newsgauge_core::annotator::mock::{MockConfig, MockRule, MockServer};
use newsgauge_core::annotator::{annotate_batch, load_fewshot, ClientConfig};
use newsgauge_core::assembler::{assemble_corpus, AssemblyConfig};
use newsgauge_core::corpus::{Dialogue, LabelSet, Taxonomy, TopicId, Utterance, TOPIC_COUNT};
use newsgauge_core::ingest::{GoldMass, HumanAnnotation, Scope};
use newsgauge_core::metrics::{
    agreement_report, bootstrap_ci, krippendorff_alpha, prf, soft_confusion, split_dataset, Averaging, Metric,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

// ---------------------------------------------------------------- soft metrics

type Case = (Vec<u8>, Vec<bool>);

fn random_corpus(rng: &mut ChaCha8Rng, max_dialogues: usize, p_pred: f64) -> Vec<Case> {
    let n = rng.gen_range(1..=max_dialogues);
    (0..n)
        .map(|_| {
            let counts = (0..TOPIC_COUNT).map(|_| rng.gen_range(0..=2u8)).collect();
            let flags = (0..TOPIC_COUNT).map(|_| rng.gen_bool(p_pred)).collect();
            (counts, flags)
        })
        .collect()
}

fn to_inputs(cases: &[Case]) -> (Vec<GoldMass>, Vec<LabelSet>) {
    let gold = cases
        .iter()
        .enumerate()
        .map(|(i, (c, _))| GoldMass::from_counts(format!("d{i:03}"), c.as_slice().try_into().unwrap()))
        .collect();
    let pred = cases
        .iter()
        .enumerate()
        .map(|(i, (_, f))| LabelSet {
            dialogue_id: format!("d{i:03}"),
            topics: TopicId::ALL.iter().zip(f).filter(|(_, on)| **on).map(|(t, _)| *t).collect(),
        })
        .collect();
    (gold, pred)
}

/// Per-topic [tp, fp, fn, tn] by listing the six (mass, decision) cases.
fn enumerate_cases(cases: &[Case]) -> Vec<[f64; 4]> {
    let mut out = vec![[0.0; 4]; TOPIC_COUNT];
    for (counts, flags) in cases {
        for t in 0..TOPIC_COUNT {
            let cell = match (counts[t], flags[t]) {
                (2, true) => [1.0, 0.0, 0.0, 0.0],
                (1, true) => [0.5, 0.5, 0.0, 0.0],
                (0, true) => [0.0, 1.0, 0.0, 0.0],
                (2, false) => [0.0, 0.0, 1.0, 0.0],
                (1, false) => [0.0, 0.0, 0.5, 0.5],
                _ => [0.0, 0.0, 0.0, 1.0],
            };
            for k in 0..4 {
                out[t][k] += cell[k];
            }
        }
    }
    out
}

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

fn prf_of(tp: f64, fp: f64, fn_: f64) -> [f64; 3] {
    let p = ratio(tp, tp + fp);
    let r = ratio(tp, tp + fn_);
    [p, r, ratio(2.0 * p * r, p + r)]
}

fn soft_oracle() -> Result<String> {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let cases = random_corpus(&mut rng, 20, 0.4);
        let (gold, pred) = to_inputs(&cases);
        let counts = soft_confusion(&gold, &pred)?;
        let oracle = enumerate_cases(&cases);
        for (t, o) in oracle.iter().enumerate() {
            let c = &counts.per_topic[t];
            for (got, want) in [c.tp, c.fp, c.fn_, c.tn].iter().zip(o) {
                worst = worst.max((got - want).abs());
            }
        }
        let sums = oracle.iter().fold([0.0; 3], |a, o| [a[0] + o[0], a[1] + o[1], a[2] + o[2]]);
        let micro = prf_of(sums[0], sums[1], sums[2]);
        let per: Vec<[f64; 3]> = oracle.iter().map(|o| prf_of(o[0], o[1], o[2])).collect();
        let macro_: Vec<f64> = (0..3).map(|k| per.iter().map(|x| x[k]).sum::<f64>() / TOPIC_COUNT as f64).collect();
        for (s, want) in [(prf(&counts, Averaging::Micro), micro.to_vec()), (prf(&counts, Averaging::Macro), macro_)] {
            for (got, w) in [s.precision, s.recall, s.f1].iter().zip(&want) {
                worst = worst.max((got - w).abs());
            }
        }
    }
    let elapsed = started.elapsed();
    ensure!(worst <= 1e-12, "max deviation {worst:e}");
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!("200 corpora, max deviation {worst:.1e}, {:.2}s", elapsed.as_secs_f64()))
}

fn worked_micro_example() -> Result<String> {
    let mut d1 = [0u8; TOPIC_COUNT];
    d1[TopicId::Sport.index()] = 2;
    d1[TopicId::Health.index()] = 1;
    let mut d2 = [0u8; TOPIC_COUNT];
    d2[TopicId::Health.index()] = 2;
    let gold = vec![GoldMass::from_counts("d1", d1), GoldMass::from_counts("d2", d2)];
    let pred = vec![
        LabelSet { dialogue_id: "d1".into(), topics: [TopicId::Sport].into() },
        LabelSet { dialogue_id: "d2".into(), topics: [TopicId::Sport, TopicId::Health].into() },
    ];
    let s = prf(&soft_confusion(&gold, &pred)?, Averaging::Micro);
    ensure!(close(s.precision, 0.6667, 5e-5), "P={}", s.precision);
    ensure!(close(s.recall, 0.8, 5e-5), "R={}", s.recall);
    ensure!(close(s.f1, 0.7273, 5e-5), "F1={}", s.f1);
    Ok(format!("P={:.4} R={:.4} F1={:.4}", s.precision, s.recall, s.f1))
}

fn alpha_fixture() -> Result<String> {
    let a = krippendorff_alpha(&[[true, true], [true, false], [false, false], [false, false]])
        .ok_or_else(|| anyhow!("alpha undefined"))?;
    ensure!(close(a, 0.5333, 5e-4), "alpha={a}");
    let perfect = krippendorff_alpha(&[[true, true], [false, false], [true, true], [false, false]]);
    ensure!(perfect == Some(1.0), "perfect agreement gave {perfect:?}");
    Ok(format!("alpha={a:.4}, perfect agreement alpha=1"))
}

// ------------------------------------------------------------------ agreement

/// Pairable-values coincidence counting for two coders and binary values.
fn alpha_by_pairs(units: &[[bool; 2]]) -> Option<f64> {
    let mut o = [[0.0f64; 2]; 2];
    for u in units {
        o[u[0] as usize][u[1] as usize] += 1.0;
        o[u[1] as usize][u[0] as usize] += 1.0;
    }
    let n0 = o[0][0] + o[0][1];
    let n1 = o[1][0] + o[1][1];
    let n = n0 + n1;
    let d_e = 2.0 * n0 * n1 / (n * (n - 1.0));
    (d_e > 0.0).then(|| 1.0 - ((o[0][1] + o[1][0]) / n) / d_e)
}

fn human(dialogue: &str, annotator: &str, topics: &[TopicId]) -> HumanAnnotation {
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

fn agreement_properties() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    for _ in 0..300 {
        let n = rng.gen_range(2..80);
        let units: Vec<[bool; 2]> = (0..n).map(|_| [rng.gen_bool(0.3), rng.gen_bool(0.3)]).collect();
        let swapped: Vec<[bool; 2]> = units.iter().map(|u| [u[1], u[0]]).collect();
        let a = krippendorff_alpha(&units);
        ensure!(a == krippendorff_alpha(&swapped), "coder order changed alpha");
        match (a, alpha_by_pairs(&units)) {
            (Some(x), Some(y)) => ensure!(close(x, y, 1e-12) && x <= 1.0 + 1e-12, "{x} vs {y}"),
            (x, y) => ensure!(x.is_none() && y.is_none(), "{x:?} vs {y:?}"),
        }
        checked += 1;
    }

    // pooled global alpha over (dialogue, topic) units
    let mut ann = Vec::new();
    let mut pooled = Vec::new();
    for d in 0..60 {
        let id = format!("d{d:02}");
        let pick = |rng: &mut ChaCha8Rng| -> Vec<TopicId> {
            let mut t: Vec<TopicId> = TopicId::ALL.iter().copied().filter(|_| rng.gen_bool(0.15)).collect();
            if t.is_empty() {
                t.push(TopicId::Other);
            }
            t
        };
        let a = pick(&mut rng);
        let b = if rng.gen_bool(0.6) { a.clone() } else { pick(&mut rng) };
        for topic in TopicId::ALL {
            pooled.push([a.contains(&topic), b.contains(&topic)]);
        }
        ann.push(human(&id, "A", &a));
        ann.push(human(&id, "B", &b));
    }
    let report = agreement_report(&ann, &HashMap::new())?;
    ensure!(report.global_alpha == krippendorff_alpha(&pooled), "global alpha is not the pooled alpha");
    let share: f64 = report.per_topic.iter().map(|t| t.mass_share).sum();
    ensure!(close(share, 1.0, 1e-9), "mass shares sum to {share}");
    Ok(format!(
        "reference dataset not bundled; synthetic agreement properties hold ({checked} unit sets, pooled global alpha {:.4})",
        report.global_alpha.unwrap_or(f64::NAN)
    ))
}

// ------------------------------------------------------------------- assembly

fn utt(program: &str, i: usize, start: f64, end: f64) -> Utterance {
    Utterance {
        utt_id: format!("{program}_{i:03}"),
        channel_id: "c".into(),
        program_id: program.into(),
        start_s: start,
        end_s: end,
        text: format!("w{i}"),
    }
}

fn groups(dialogues: &[Dialogue]) -> Vec<Vec<String>> {
    dialogues.iter().map(|d| d.member_utt_ids.clone()).collect()
}

fn check_assembly(utterances: &[Utterance], cfg: &AssemblyConfig) -> Result<()> {
    let dialogues = assemble_corpus(utterances, cfg)?;
    let by_id: HashMap<&str, &Utterance> = utterances.iter().map(|u| (u.utt_id.as_str(), u)).collect();
    let flat: Vec<&str> = dialogues.iter().flat_map(|d| d.member_utt_ids.iter().map(String::as_str)).collect();
    let ids: Vec<&str> = utterances.iter().map(|u| u.utt_id.as_str()).collect();
    ensure!(flat == ids, "not an ordered partition");
    let speech: f64 = utterances.iter().map(Utterance::duration_s).sum();
    let assembled: f64 = dialogues.iter().map(|d| d.speech_duration_s).sum();
    ensure!(close(speech, assembled, 1e-6), "speech {speech} vs {assembled}");
    for d in &dialogues {
        let m: Vec<&Utterance> = d.member_utt_ids.iter().map(|id| by_id[id.as_str()]).collect();
        if m.len() > 1 {
            ensure!(d.speech_duration_s < cfg.max_total_s, "{} too long", d.dialogue_id);
            for w in m.windows(2) {
                ensure!(w[1].start_s - w[0].end_s < cfg.max_gap_s, "{} gap too wide", d.dialogue_id);
            }
        }
    }
    for w in dialogues.windows(2) {
        if w[0].program_id == w[1].program_id {
            let next = by_id[w[1].member_utt_ids[0].as_str()];
            let joinable = next.start_s - w[0].end_s < cfg.max_gap_s
                && w[0].speech_duration_s + next.duration_s() < cfg.max_total_s;
            ensure!(!joinable, "{} could have joined {}", next.utt_id, w[0].dialogue_id);
        }
    }
    Ok(())
}

fn assembly() -> Result<String> {
    let cfg = AssemblyConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let mut utterances = Vec::new();
        for p in 0..rng.gen_range(1..4) {
            let mut t = 0u32;
            for i in 0..rng.gen_range(1..40) {
                let start = t + rng.gen_range(0..200);
                let end = start + rng.gen_range(1..400);
                utterances.push(utt(&format!("p{p}"), i, f64::from(start) / 10.0, f64::from(end) / 10.0));
                t = end;
            }
        }
        check_assembly(&utterances, &cfg)?;
    }

    let ids = |v: &[usize]| v.iter().map(|i| format!("p_{i:03}")).collect::<Vec<_>>();
    let a = [utt("p", 0, 0.0, 5.0), utt("p", 1, 12.0, 16.0), utt("p", 2, 30.0, 34.0)];
    ensure!(groups(&assemble_corpus(&a, &cfg)?) == [ids(&[0, 1]), ids(&[2])], "first worked example");
    let b = assemble_corpus(&[utt("p", 0, 0.0, 70.0)], &cfg)?;
    ensure!(groups(&b) == [ids(&[0])] && b[0].speech_duration_s == 70.0, "second worked example");
    let c = [utt("p", 0, 0.0, 25.0), utt("p", 1, 26.0, 51.0), utt("p", 2, 52.0, 77.0)];
    ensure!(groups(&assemble_corpus(&c, &cfg)?) == [ids(&[0, 1]), ids(&[2])], "third worked example");
    Ok("1000 random streams, 3 worked examples".into())
}

fn split_check() -> Result<String> {
    let ids: Vec<String> = (0..804).map(|i| format!("dlg{i:04}")).collect();
    let (dev, test) = split_dataset(&ids, 0.7525, 42)?;
    ensure!(test.len() == 605 && dev.len() == 199, "{}/{}", test.len(), dev.len());
    ensure!(split_dataset(&ids, 0.7525, 42)? == (dev.clone(), test.clone()), "not deterministic");
    let mut all: Vec<String> = dev.iter().chain(&test).cloned().collect();
    all.sort();
    ensure!(all == ids, "not a partition");
    Ok(format!("{} test / {} dev, stable under seed", test.len(), dev.len()))
}

fn bootstrap() -> Result<String> {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let cases: Vec<Case> = (0..605)
        .map(|_| {
            let counts: Vec<u8> = (0..TOPIC_COUNT)
                .map(|_| if rng.gen_bool(0.12) { rng.gen_range(1..=2) } else { 0 })
                .collect();
            let flags = counts
                .iter()
                .map(|c| if *c > 0 { rng.gen_bool(0.85) } else { rng.gen_bool(0.03) })
                .collect();
            (counts, flags)
        })
        .collect();
    let (gold, pred) = to_inputs(&cases);
    let a = bootstrap_ci(&gold, &pred, Metric::MicroF1, 1000, 0.95, 42)?;
    let b = bootstrap_ci(&gold, &pred, Metric::MicroF1, 1000, 0.95, 42)?;
    ensure!(a == b, "same seed gave {a:?} and {b:?}");
    ensure!(a.half_width() <= 0.05, "half-width {}", a.half_width());

    let mut sport = [0u8; TOPIC_COUNT];
    sport[TopicId::Sport.index()] = 2;
    let flat: Vec<Case> = (0..40).map(|_| (sport.to_vec(), sport.iter().map(|c| *c > 0).collect())).collect();
    let (g, p) = to_inputs(&flat);
    let c = bootstrap_ci(&g, &p, Metric::MicroF1, 1000, 0.95, 9)?;
    ensure!(c.lo == c.point && c.hi == c.point, "constant data gave {c:?}");
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!(
        "bit-exact under seed, constant data degenerate, 605 dialogues micro-F1 {:.4} [{:.4}, {:.4}] half-width {:.4}, {:.2}s",
        a.point,
        a.lo,
        a.hi,
        a.half_width(),
        elapsed.as_secs_f64()
    ))
}

// ---------------------------------------------------------------- annotator

fn annotator_robustness() -> Result<String> {
    let tax = Taxonomy::builtin();
    let fewshot = load_fewshot(&std::fs::read(fixtures_dir().join("fewshot.json"))?, &tax)?;
    let rule = |c: &str, r: &str| MockRule { contains: c.into(), response: r.into() };
    let canned = MockConfig {
        rules: vec![
            rule("cas-valide", r#"["sport", "météo"]"#),
            rule("cas-prose", "Voici : [\"politique\"] en espérant avoir aidé."),
            rule("cas-bloc", "```json\n[\"santé\"]\n```"),
            rule("cas-invente", r#"["sport", "horoscope"]"#),
            rule("cas-refus", "Je ne peux pas classer ce texte."),
        ],
        ..MockConfig::default()
    };
    let dialogue = |id: &str| Dialogue {
        dialogue_id: id.into(),
        program_id: "p".into(),
        channel_id: "c".into(),
        member_utt_ids: vec![id.into()],
        start_s: 0.0,
        end_s: 1.0,
        speech_duration_s: 1.0,
        text: format!("texte {id}"),
    };
    let runtime = tokio::runtime::Runtime::new()?;

    let server = MockServer::spawn(MockConfig { delay_ms: 15, ..canned.clone() })?;
    let cfg = ClientConfig {
        endpoint_url: server.url(),
        max_in_flight: 2,
        backoff_base_ms: 1,
        ..ClientConfig::default()
    };
    let names = ["cas-valide", "cas-prose", "cas-bloc", "cas-invente", "cas-refus"];
    let dialogues: Vec<Dialogue> = names.iter().cycle().take(20).map(|n| dialogue(n)).collect();
    let (out, stats) = runtime.block_on(annotate_batch(&dialogues, &tax, &fewshot, &cfg))?;
    use TopicId::*;
    let expected = [vec![Sport, Weather], vec![Politics], vec![Health], vec![Sport], vec![Other]];
    for (a, d) in out.iter().zip(&dialogues) {
        ensure!(a.dialogue_id == d.dialogue_id, "order changed");
        let k = names.iter().position(|n| *n == d.dialogue_id).unwrap();
        let want: std::collections::BTreeSet<TopicId> = expected[k].iter().copied().collect();
        ensure!(a.topics == want, "{}: {:?}", d.dialogue_id, a.topics);
        let canonical = a.label_set().topics.iter().all(|t| tax.canonical_topic(t.as_str()).map(|x| x.id) == Some(*t));
        ensure!(canonical, "non-canonical label");
    }
    ensure!(stats.dropped_unknown == 4 && stats.fallbacks == 4 && stats.failed == 0, "{stats:?}");
    let seen = server.stats().max_in_flight;
    ensure!(seen <= 2, "in-flight {seen} above cap 2");
    drop(server);

    let server = MockServer::spawn(MockConfig { script: vec![429, 429], ..canned })?;
    let cfg = ClientConfig { endpoint_url: server.url(), max_in_flight: 1, backoff_base_ms: 1, ..ClientConfig::default() };
    let (out, _) = runtime.block_on(annotate_batch(&[dialogue("cas-valide")], &tax, &fewshot, &cfg))?;
    ensure!(out[0].retries == 2 && out[0].error.is_none(), "{:?}", out[0]);
    Ok(format!("5 canned responses x4, 429,429,200 -> 2 retries, peak in-flight {seen}/2"))
}

// ----------------------------------------------------------- planted bias

const CHANNELS: [(&str, &str, &str); 4] =
    [("fr2", "tv", "public"), ("tf1", "tv", "private"), ("fi", "radio", "public"), ("rtl", "radio", "private")];
const PROGRAMS_PER_CHANNEL: usize = 6;
const DIALOGUES_PER_PROGRAM: usize = 25;

/// Female seconds per utterance for (weather, sport, politics) in two
/// variants; each utterance lasts 10 s and dialogues hold two utterances.
const FEMALE_PER_UTT: [[f64; 2]; 3] = [[6.0, 4.4], [2.5, 1.5], [5.8, 3.8]];
const TEXTS: [&str; 3] = ["des averses sont attendues", "le match de football", "débat à l'assemblée"];
const GOLD: [&str; 3] = ["météo", "sport", "politique"];

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
    server: MockServer,
    n_dialogues: usize,
}

fn build_fixture() -> Result<Fixture> {
    let dir = tempfile::tempdir()?;
    let root = dir.path().to_path_buf();
    let gender_dir = root.join("gender");
    std::fs::create_dir_all(&gender_dir)?;

    let mut utterances = String::new();
    let mut gold = String::from("dialogue_id,annotator_id,topics,scope,flag_ukraine,flag_israel_hamas,flag_mixed\n");
    let mut k = 0usize;
    for (c, (channel, _, _)) in CHANNELS.iter().enumerate() {
        for p in 0..PROGRAMS_PER_CHANNEL {
            let program = format!("{channel}_{p:02}");
            let mut spans = String::from("labels,start,stop\n");
            for j in 0..DIALOGUES_PER_PROGRAM {
                let topic = k % 3;
                let female = FEMALE_PER_UTT[topic][(k / 3) % 2];
                let t0 = j as f64 * 40.0;
                for (u, start) in [t0, t0 + 11.0].into_iter().enumerate() {
                    let line = serde_json::json!({
                        "utt_id": format!("{program}_{:03}", 2 * j + u),
                        "channel_id": channel,
                        "program_id": program,
                        "start_s": start,
                        "end_s": start + 10.0,
                        "text": if u == 0 { format!("{} bulletin {k}", TEXTS[topic]) } else { "suite du sujet".into() },
                    });
                    writeln!(utterances, "{line}")?;
                    writeln!(spans, "female,{start},{}", start + female)?;
                    writeln!(spans, "male,{},{}", start + female, start + 10.0)?;
                }
                writeln!(spans, "music,{},{}", t0 + 21.0, t0 + 30.0)?;
                if c == 0 && p < 2 {
                    let id = format!("{program}-{:05}", 2 * j);
                    let second = if j % 5 == 0 { format!("{};société", GOLD[topic]) } else { GOLD[topic].into() };
                    writeln!(gold, "{id},A,{},national,0,0,0", GOLD[topic])?;
                    writeln!(gold, "{id},B,{second},national,0,0,0")?;
                }
                k += 1;
            }
            std::fs::write(gender_dir.join(format!("{program}.csv")), spans)?;
        }
    }
    std::fs::write(root.join("utterances.jsonl"), utterances)?;
    std::fs::write(root.join("gold.csv"), gold)?;
    let channels: Vec<_> = CHANNELS
        .iter()
        .map(|(id, medium, ownership)| serde_json::json!({"channel_id": id, "medium": medium, "ownership": ownership}))
        .collect();
    std::fs::write(root.join("channels.json"), serde_json::to_vec(&channels)?)?;

    let rules = MockConfig::from_json(&std::fs::read(fixtures_dir().join("mock_rules.json"))?)?;
    let server = MockServer::spawn(rules)?;
    Ok(Fixture { _dir: dir, root, server, n_dialogues: k })
}

fn run_pipeline(f: &Fixture, out: &str) -> Result<PathBuf> {
    let out = f.root.join(out);
    let s = |p: PathBuf| p.to_string_lossy().into_owned();
    let argv = [
        "newsgauge".to_string(),
        "pipeline".into(),
        "--utterances".into(),
        s(f.root.join("utterances.jsonl")),
        "--gender-spans".into(),
        s(f.root.join("gender")),
        "--channels".into(),
        s(f.root.join("channels.json")),
        "--annotations".into(),
        s(f.root.join("gold.csv")),
        "--fewshot".into(),
        s(fixtures_dir().join("fewshot.json")),
        "--endpoint".into(),
        f.server.url(),
        "--group-by".into(),
        "ownership".into(),
        "--seed".into(),
        "7".into(),
        "--out".into(),
        s(out.clone()),
    ];
    let code = newsgauge::run(argv);
    ensure!(code == 0, "pipeline exited with {code}");
    Ok(out)
}

fn overall_rows(path: &Path) -> Result<BTreeMap<String, csv::StringRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = BTreeMap::new();
    for r in reader.records() {
        let r = r?;
        if &r[0] == "all" {
            rows.insert(r[1].to_string(), r);
        }
    }
    Ok(rows)
}

fn num(r: &csv::StringRecord, i: usize) -> Result<f64> {
    r[i].parse().with_context(|| format!("cell `{}`", &r[i]))
}

fn planted_bias(f: &Fixture) -> Result<String> {
    let started = Instant::now();
    let out = run_pipeline(f, "run_a")?;
    let elapsed = started.elapsed();
    ensure!(f.n_dialogues >= 500, "{} dialogues", f.n_dialogues);

    let parity = overall_rows(&out.join("parity_by_topic.csv"))?;
    let disparity = overall_rows(&out.join("disparity_by_topic.csv"))?;
    let weather = num(&parity["weather"], 4)?;
    let sport = num(&parity["sport"], 4)?;
    let global = num(&disparity["weather"], 3)?;
    ensure!(close(global, 0.40, 0.005), "global parity {global}");
    ensure!(close(weather, 0.52, 0.005), "weather parity {weather}");
    ensure!(close(sport, 0.20, 0.005), "sport parity {sport}");
    let d_weather = num(&disparity["weather"], 4)?;
    let d_sport = num(&disparity["sport"], 4)?;
    ensure!(d_weather < 0.0 && d_sport > 0.0, "disparity signs {d_weather} {d_sport}");
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!(
        "{} dialogues, parity global {global:.4} weather {weather:.4} sport {sport:.4}, disparity weather {d_weather:+.4} sport {d_sport:+.4}, {:.2}s",
        f.n_dialogues,
        elapsed.as_secs_f64()
    ))
}

fn files_under(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            out.extend(files_under(&path)?);
        } else {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn determinism(f: &Fixture) -> Result<String> {
    let a = f.root.join("run_a");
    if !a.exists() {
        run_pipeline(f, "run_a")?;
    }
    let b = run_pipeline(f, "run_b")?;
    let mut compared = 0;
    for path in files_under(&a)? {
        let rel = path.strip_prefix(&a)?;
        if rel.ends_with("run_manifest.json") {
            continue;
        }
        ensure!(std::fs::read(&path)? == std::fs::read(b.join(rel))?, "{} differs", rel.display());
        compared += 1;
    }
    ensure!(files_under(&a)?.len() == files_under(&b)?.len(), "different file sets");
    Ok(format!("{compared} output files byte-identical across runs"))
}

fn main() {
    let fixture = build_fixture();
    let with_fixture = |check: fn(&Fixture) -> Result<String>| -> Result<String> {
        match &fixture {
            Ok(f) => check(f),
            Err(e) => Err(anyhow!("fixture: {e:#}")),
        }
    };
    let results: Vec<(&str, Result<String>)> = vec![
        ("soft-metric oracle equivalence", soft_oracle()),
        ("worked micro-F1 example", worked_micro_example()),
        ("krippendorff fixture", alpha_fixture()),
        ("per-topic agreement table", agreement_properties()),
        ("assembly properties", assembly()),
        ("dev/test split", split_check()),
        ("bootstrap determinism and degeneracy", bootstrap()),
        ("planted-bias end-to-end", with_fixture(planted_bias)),
        ("annotator robustness", annotator_robustness()),
        ("pipeline determinism", with_fixture(determinism)),
    ];
    let mut failed = 0;
    for (name, result) in &results {
        match result {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(e) => {
                failed += 1;
                println!("FAIL  {name}: {e:#}");
            }
        }
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
