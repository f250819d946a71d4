//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any criterion fails.

use std::collections::HashSet;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use sdg_core::classifier::{featurize, Featurizer, FeaturizerConfig, Objective};
use sdg_core::dataset::{split_dataset, split_indices, SplitConfig};
use sdg_core::eval::{compare_models, micro_metrics, per_label_f1, MetricsReport};
use sdg_core::ingest::RawCourse;
use sdg_core::io::read_json;
use sdg_core::labelgen::{parse_sdg_response, parse_sdg_response_bytes, LabeledCourse, Provenance};
use sdg_core::labels::NUM_GOALS;
use sdg_core::preprocess::{clean, combined_length, CleanCourse, FilterConfig};
use sdg_core::{decode_labels, encode_labels, LabelSet, LabelVector};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

// 1. Encoding round trip.

const CLINICAL_PRACTICE_VECTOR: [u8; NUM_GOALS] = [0, 0, 1, 0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0];

fn encoding_round_trip() -> Outcome {
    let start = Instant::now();
    let goals: Vec<u8> = (1..=17).filter(|&g| g != 4).collect();
    for mask in 0u32..1 << goals.len() {
        let members: Vec<u8> = goals.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &g)| g).collect();
        let set = LabelSet::new(members.iter().copied()).map_err(|e| format!("{members:?}: {e}"))?;
        let vector = encode_labels(&set);
        ensure(vector.count_ones() == members.len(), || format!("{members:?}: wrong popcount"))?;
        for (slot, &bit) in vector.slots().iter().enumerate() {
            let expected = u8::from(members.contains(&((slot + 1) as u8)));
            ensure(bit == expected, || format!("{members:?}: slot {slot} is {bit}"))?;
        }
        let back = decode_labels(&vector);
        ensure(back == set && back.goals() == members.as_slice(), || format!("{members:?} decoded to {back}"))?;
    }
    let encoded = encode_labels(&LabelSet::new([3, 5, 8]).unwrap());
    ensure(*encoded.slots() == CLINICAL_PRACTICE_VECTOR, || format!("{{3,5,8}} encoded to {:?}", encoded.slots()))?;
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(10))?;
    Ok(format!("65536 sets in {elapsed:.2?}"))
}

// 2. Metric oracle equivalence.

#[derive(Debug, Default, Clone, Copy)]
struct Tally {
    tp: u64,
    fp: u64,
    fn_: u64,
}

fn safe_div(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

fn prf(t: Tally) -> (f64, f64, f64) {
    let p = safe_div(t.tp, t.tp + t.fp);
    let r = safe_div(t.tp, t.tp + t.fn_);
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

/// Counts by walking decoded goal sets rather than slots.
fn brute_force(pred: &[LabelVector], gold: &[LabelVector]) -> [Tally; NUM_GOALS] {
    let mut out = [Tally::default(); NUM_GOALS];
    for goal in 1..=NUM_GOALS as u8 {
        let t = &mut out[goal as usize - 1];
        for (p, g) in pred.iter().zip(gold) {
            let in_p = decode_labels(p).goals().contains(&goal);
            let in_g = decode_labels(g).goals().contains(&goal);
            t.tp += u64::from(in_p && in_g);
            t.fp += u64::from(in_p && !in_g);
            t.fn_ += u64::from(!in_p && in_g);
        }
    }
    out
}

fn random_vector(rng: &mut ChaCha8Rng, density: f64) -> LabelVector {
    let goals: Vec<i64> = (1..=17).filter(|&g| g != 4 && rng.random_bool(density)).collect();
    encode_labels(&LabelSet::new(goals).unwrap())
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}

fn metric_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..200 {
        let n = rng.random_range(0..=500);
        let (dp, dg) = (rng.random_range(0.0..0.5), rng.random_range(0.0..0.5));
        let gold: Vec<LabelVector> = (0..n).map(|_| random_vector(&mut rng, dg)).collect();
        let pred: Vec<LabelVector> = (0..n).map(|_| random_vector(&mut rng, dp)).collect();
        let tallies = brute_force(&pred, &gold);

        let pooled = tallies.iter().fold(Tally::default(), |a, t| Tally {
            tp: a.tp + t.tp,
            fp: a.fp + t.fp,
            fn_: a.fn_ + t.fn_,
        });
        let micro = micro_metrics(&pred, &gold).map_err(|e| e.to_string())?;
        let c = micro.counts;
        ensure((c.tp, c.fp, c.fn_) == (pooled.tp, pooled.fp, pooled.fn_), || format!("case {case}: micro counts"))?;
        let (p, r, f) = prf(pooled);
        ensure(close(micro.precision, p) && close(micro.recall, r) && close(micro.f1, f), || {
            format!("case {case}: micro {micro:?} vs ({p}, {r}, {f})")
        })?;

        let rows = per_label_f1(&pred, &gold).map_err(|e| e.to_string())?;
        ensure(rows.len() == NUM_GOALS, || format!("case {case}: {} rows", rows.len()))?;
        for (row, t) in rows.iter().zip(&tallies) {
            let (p, r, f) = prf(*t);
            let counts_match = (row.tp, row.fp, row.fn_, row.support) == (t.tp, t.fp, t.fn_, t.tp + t.fn_);
            let zero = t.tp + t.fn_ + t.fp == 0;
            ensure(counts_match && row.zero_support == zero, || format!("case {case}: goal {} counts", row.goal))?;
            ensure(close(row.precision, p) && close(row.recall, r) && close(row.f1, f), || {
                format!("case {case}: goal {} scores", row.goal)
            })?;
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(5))?;
    Ok(format!("200 cases in {elapsed:.2?}"))
}

// 3. Hand-checkable case.

fn hand_checked_metrics() -> Outcome {
    let v = |g: &[i64]| encode_labels(&LabelSet::new(g.iter().copied()).unwrap());
    let gold = [v(&[3, 5]), v(&[8])];
    let pred = [v(&[3]), v(&[8, 9])];
    let m = micro_metrics(&pred, &gold).map_err(|e| e.to_string())?;
    let third = 2.0 / 3.0;
    ensure(close(m.precision, third) && close(m.recall, third) && close(m.f1, third), || format!("{m:?}"))?;
    Ok(format!("P={:.4} R={:.4} F1={:.4}", m.precision, m.recall, m.f1))
}

// 4. Parser robustness.

/// Reference extraction: split on anything that is not an ASCII digit.
fn reference_parse(text: &str) -> Vec<u8> {
    let mut seen = Vec::new();
    for run in text.split(|c: char| !c.is_ascii_digit()).filter(|r| !r.is_empty()) {
        if seen.len() == 5 {
            break;
        }
        let trimmed = run.trim_start_matches('0');
        if trimmed.len() > 2 {
            continue;
        }
        let value: u8 = if trimmed.is_empty() { 0 } else { trimmed.parse().unwrap() };
        if (1..=17).contains(&value) && value != 4 && !seen.contains(&value) {
            seen.push(value);
        }
    }
    seen.sort_unstable();
    seen
}

fn fuzz_input(rng: &mut ChaCha8Rng) -> Vec<u8> {
    const ALPHABET: &[&str] = &[
        "0", "1", "2", "3", "4", "5", "7", "9", "13", "17", "18", ",", " ", ", ", "-", ".", "\n", "goal", "SDG",
        "and", "é", "٣", "００", "\u{0}", "99999999999999999999999", "0004", "017",
    ];
    match rng.random_range(0..3) {
        0 => (0..rng.random_range(0..64)).map(|_| rng.random()).collect(),
        1 => (0..rng.random_range(0..40))
            .flat_map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())].bytes())
            .collect(),
        _ => {
            let mut s = String::new();
            for _ in 0..rng.random_range(0..12) {
                let n: u64 = match rng.random_range(0..4) {
                    0 => rng.random_range(0..20),
                    1 => rng.random_range(0..1000),
                    2 => rng.random(),
                    _ => 4,
                };
                s.push_str(&n.to_string());
                s.push_str([",", " ", ";", " and ", "x"][rng.random_range(0..5)]);
            }
            s.into_bytes()
        }
    }
}

fn parser_robustness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut parsed, mut empty) = (0, 0);
    for i in 0..10_000 {
        let input = fuzz_input(&mut rng);
        let expected = reference_parse(&String::from_utf8_lossy(&input));
        match parse_sdg_response_bytes(&input, 5) {
            Ok(set) => {
                let g = set.goals();
                ensure(!g.is_empty() && g.len() <= 5, || format!("input {i}: size {}", g.len()))?;
                ensure(g.windows(2).all(|w| w[0] < w[1]), || format!("input {i}: not strictly sorted {g:?}"))?;
                ensure(g.iter().all(|&x| (1..=17).contains(&x) && x != 4), || format!("input {i}: bad goal {g:?}"))?;
                ensure(g == expected.as_slice(), || format!("input {i}: {g:?} vs reference {expected:?}"))?;
                parsed += 1;
            }
            Err(_) => {
                ensure(expected.is_empty(), || format!("input {i}: rejected but reference found {expected:?}"))?;
                empty += 1;
            }
        }
    }
    let goals = |t: &str| parse_sdg_response(t, 5).map(|s| s.goals().to_vec());
    ensure(goals("3, 5, 8") == Ok(vec![3, 5, 8]), || "\"3, 5, 8\"".into())?;
    ensure(goals(" 8,3,3,4 ") == Ok(vec![3, 8]), || "\" 8,3,3,4 \"".into())?;
    ensure(goals("The most relevant goals are 7, 9 and 13.") == Ok(vec![7, 9, 13]), || "sentence example".into())?;
    ensure(goals("none apply").is_err(), || "\"none apply\" parsed".into())?;
    Ok(format!("10000 inputs, {parsed} parsed, {empty} empty; documented examples exact"))
}

// 5. Split law.

fn dummy_courses(n: usize) -> Vec<LabeledCourse> {
    (0..n)
        .map(|i| LabeledCourse {
            course: CleanCourse {
                id: format!("C{i:05}"),
                name: String::new(),
                description: String::new(),
                objective: String::new(),
                year: 2022,
                degree: String::new(),
                combined_text: String::new(),
            },
            labels: LabelVector::zeros().with_goal(1).unwrap(),
            provenance: Provenance::Oracle,
            raw_response: None,
            correction_source: None,
            attempts: 0,
            needs_review: false,
        })
        .collect()
}

fn split_law() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let config = SplitConfig::default();
    for trial in 0..1000 {
        let n = rng.random_range(3..=10_000);
        let parts = split_indices(n, &config).map_err(|e| format!("n={n}: {e}"))?;
        let expected = (70 * n / 100, 15 * n / 100, n - 70 * n / 100 - 15 * n / 100);
        let got = (parts[0].len(), parts[1].len(), parts[2].len());
        ensure(got == expected, || format!("n={n}: sizes {got:?}, expected {expected:?}"))?;
        let mut seen = vec![false; n];
        for &i in parts.iter().flatten() {
            ensure(i < n && !seen[i], || format!("n={n}: index {i} repeated or out of range"))?;
            seen[i] = true;
        }
        ensure(seen.iter().all(|&s| s), || format!("n={n}: not covering"))?;
        if trial % 10 == 0 {
            let again = split_indices(n, &config).unwrap();
            ensure(again == parts, || format!("n={n}: same seed gave a different split"))?;
        }
    }
    let bundle = split_dataset(&dummy_courses(2125), &config).map_err(|e| e.to_string())?;
    let sizes = (bundle.train.len(), bundle.validation.len(), bundle.test.len());
    ensure(sizes == (1487, 318, 320), || format!("n=2125 gave {sizes:?}"))?;
    Ok("1000 sizes, n=2125 -> 1487/318/320".into())
}

// 6. Gradient check.

const GRADIENT_DOCS: [(&str, &[i64]); 10] = [
    ("clean water and sanitation for rural communities", &[6]),
    ("renewable energy systems and solar power grids", &[7]),
    ("climate action and carbon emissions policy", &[13]),
    ("marine ecosystems ocean water pollution", &[14, 6]),
    ("health care nursing and patient wellbeing", &[3]),
    ("partnerships for the goals and quality of schools", &[17]),
    ("gender equality in the workplace and health", &[5, 3]),
    ("sustainable cities transport and housing energy", &[11, 7]),
    ("poverty reduction and decent work economic growth", &[1, 8]),
    ("forest biodiversity and land ecosystems climate", &[15, 13]),
];

fn gradient_check() -> Outcome {
    let texts: Vec<&str> = GRADIENT_DOCS.iter().map(|(t, _)| *t).collect();
    let config = FeaturizerConfig {
        min_df: 1,
        ..FeaturizerConfig::default()
    };
    let featurizer = Featurizer::fit(&texts, config).map_err(|e| e.to_string())?;
    let items: Vec<(&str, LabelVector)> = GRADIENT_DOCS
        .iter()
        .map(|(t, g)| (*t, encode_labels(&LabelSet::new(g.iter().copied()).unwrap())))
        .collect();
    let examples = featurize(&featurizer, &items);
    let objective = Objective {
        examples: &examples,
        columns: featurizer.vocabulary_size() + 1,
        l2: 1e-2,
    };
    let dim = NUM_GOALS * objective.columns;
    let h = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut worst, mut checked) = (0.0f64, 0usize);
    for point in 0..5 {
        let w: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (_, analytic) = objective.loss_and_gradient(&w, true);
        let mut probe = w.clone();
        for j in 0..dim {
            probe[j] = w[j] + h;
            let up = objective.loss(&probe);
            probe[j] = w[j] - h;
            let down = objective.loss(&probe);
            probe[j] = w[j];
            let numeric = (up - down) / (2.0 * h);
            let scale = analytic[j].abs().max(numeric.abs());
            if scale < 1e-8 {
                continue;
            }
            let rel = (analytic[j] - numeric).abs() / scale;
            ensure(rel <= 1e-4, || {
                format!("point {point}, weight {j}: analytic {} numeric {numeric} rel {rel:.2e}", analytic[j])
            })?;
            worst = worst.max(rel);
            checked += 1;
        }
    }
    Ok(format!("{checked} partials at 5 points, worst relative error {worst:.2e}"))
}

// 7. Synthetic end-to-end.

fn run_pipeline_binary(work: &Path, catalog: &Path) -> Result<Duration, String> {
    let bin = env!("CARGO_BIN_EXE_sdg");
    let pinned = Command::new("taskset").arg("-c").arg("0").arg("true").status().is_ok_and(|s| s.success());
    let mut cmd = if pinned {
        let mut c = Command::new("taskset");
        c.args(["-c", "0", bin]);
        c
    } else {
        Command::new(bin)
    };
    cmd.env("RUST_LOG", "warn")
        .arg("run")
        .arg("--catalog")
        .arg(catalog)
        .arg("--work-dir")
        .arg(work);
    let start = Instant::now();
    let out = cmd.output().map_err(|e| format!("spawn: {e}"))?;
    let elapsed = start.elapsed();
    ensure(out.status.success(), || format!("run failed: {}", String::from_utf8_lossy(&out.stderr)))?;
    Ok(elapsed)
}

fn synthetic_end_to_end() -> Outcome {
    let catalog = manifest_dir().join("fixtures/synthetic_catalog.jsonl");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let first = run_pipeline_binary(&a, &catalog)?;
    within(first, Duration::from_secs(60))?;
    let second = run_pipeline_binary(&b, &catalog)?;
    within(second, Duration::from_secs(60))?;
    let report: MetricsReport = read_json(&a.join("report.json")).map_err(|e| e.to_string())?;
    ensure(report.dataset_name == "test", || format!("evaluated on {}", report.dataset_name))?;
    ensure(report.micro_f1 >= 0.90, || format!("test micro-F1 {:.3}", report.micro_f1))?;
    let ma = std::fs::read(a.join("manifest.json")).map_err(|e| e.to_string())?;
    let mb = std::fs::read(b.join("manifest.json")).map_err(|e| e.to_string())?;
    ensure(ma == mb, || "manifests differ between runs".into())?;
    Ok(format!("test micro-F1 {:.3}, runs {first:.2?} / {second:.2?}, manifests identical", report.micro_f1))
}

// 8. Comparison fixture.

fn comparison_fixture() -> Outcome {
    let dir = manifest_dir().join("fixtures/published");
    let names = ["bert", "mbert", "roberta", "xlm-roberta", "bart"];
    let paths: Vec<PathBuf> = names.iter().map(|n| dir.join(format!("{n}.json"))).collect();
    let reports: Vec<MetricsReport> =
        paths.iter().map(|p| read_json(p)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let csv = compare_models(&reports).to_csv();
    let first = csv.lines().nth(1).unwrap_or_default().to_string();
    ensure(first == "BART,0.769,0.803,0.786", || format!("library ranked first: {first}"))?;

    let out = Command::new(env!("CARGO_BIN_EXE_sdg"))
        .env("RUST_LOG", "warn")
        .arg("compare")
        .arg("--reports")
        .args(&paths)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || String::from_utf8_lossy(&out.stderr).into_owned())?;
    let stdout = String::from_utf8_lossy(&out.stdout);
    ensure(stdout == csv, || format!("CLI output differs:\n{stdout}"))?;
    Ok(first)
}

// 9. Cleaning conservation.

const EN_WORDS: &[&str] = &[
    "the", "student", "learns", "to", "plan", "and", "the", "basics", "of", "care", "in", "a", "team", "with",
    "for", "project", "is", "on", "practice", "methods", "analysis", "of", "data",
];
const EN_ACCENTED: &[&str] = &["the", "café", "and", "naïve", "résumé", "of", "the", "coöperation", "in", "Zürich"];
const FI_WORDS: &[&str] = &[
    "opiskelija", "oppii", "ja", "hoitotyön", "perusteet", "on", "että", "se", "mutta", "kurssilla", "ja",
    "harjoittelu", "on",
];

/// Exactly `len` characters drawn from `pool`.
fn text_of(len: usize, pool: &[&str], rng: &mut ChaCha8Rng) -> String {
    let mut s = String::new();
    while s.chars().count() < len {
        s.push_str(pool[rng.random_range(0..pool.len())]);
        s.push(' ');
    }
    s.chars().take(len).collect()
}

fn record(id: &str, year: u16, total: usize, pool: &[&str], rng: &mut ChaCha8Rng) -> RawCourse {
    let d = total.min(200) / 2;
    RawCourse {
        id: id.into(),
        name: format!("Course {id}"),
        description: Some(text_of(d, pool, rng)),
        objective: Some(text_of(total - d, pool, rng)),
        year,
        degree: ["Nursing", "Engineering", "Business"][rng.random_range(0..3)].into(),
        source_language_hint: None,
    }
}

struct Adversarial {
    records: Vec<RawCourse>,
    must_keep: HashSet<String>,
    must_drop: HashSet<String>,
}

fn adversarial_fixture() -> Adversarial {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut records = Vec::new();
    let mut must_keep = HashSet::new();
    let mut must_drop = HashSet::new();
    let valid_len = |rng: &mut ChaCha8Rng| rng.random_range(600..1800);

    for i in 0..100 {
        let len = valid_len(&mut rng);
        let mut r = record(&format!("MISS-{i}"), 2022, len, EN_WORDS, &mut rng);
        match i % 4 {
            0 | 1 => r.description = None,
            2 => r.objective = Some("   ".into()),
            _ => {
                r.objective = None;
                r.year = 2019;
            }
        }
        must_drop.insert(r.id.clone());
        records.push(r);
    }
    for i in 0..100 {
        let year = [2018, 2019, 2020, 2024, 2025][i % 5];
        let len = if i < 20 { 120 } else { valid_len(&mut rng) };
        let r = record(&format!("YEAR-{i}"), year, len, EN_WORDS, &mut rng);
        must_drop.insert(r.id.clone());
        records.push(r);
    }
    for (tag, len, keep) in [("L499", 499, false), ("L500", 500, true), ("L2000", 2000, true), ("L2001", 2001, false)] {
        for i in 0..50 {
            let pool = if i % 5 == 0 { EN_ACCENTED } else { EN_WORDS };
            let r = record(&format!("{tag}-{i}"), 2021 + (i % 3) as u16, len, pool, &mut rng);
            assert_eq!(combined_length(&r).unwrap(), len);
            if keep { &mut must_keep } else { &mut must_drop }.insert(r.id.clone());
            records.push(r);
        }
    }
    for i in 0..100 {
        let len = if i < 50 { rng.random_range(40..450) } else { rng.random_range(2100..4000) };
        let r = record(&format!("LEN-{i}"), 2022, len, EN_WORDS, &mut rng);
        must_drop.insert(r.id.clone());
        records.push(r);
    }
    for i in 0..100 {
        let len = valid_len(&mut rng);
        let mut r = record(&format!("FI-{i}"), 2022, len, FI_WORDS, &mut rng);
        r.name = format!("Hoitotyön kurssi {i}");
        must_drop.insert(r.id.clone());
        records.push(r);
    }
    let mut pairs = Vec::new();
    for i in 0..100 {
        let len = valid_len(&mut rng);
        let a = record(&format!("DUP-{i}-a"), 2021, len, EN_WORDS, &mut rng);
        let mut b = a.clone();
        b.id = format!("DUP-{i}-b");
        b.year = if i < 20 { 2021 } else { 2023 };
        if i % 3 == 0 {
            b.name = b.name.to_uppercase();
            b.description = b.description.map(|d| format!("  {}  ", d.replace(' ', "   ")));
        }
        pairs.push((a.id.clone(), b.id.clone(), i < 20));
        records.push(a);
        records.push(b);
    }
    for i in 0..200 {
        let len = valid_len(&mut rng);
        let r = record(&format!("OK-{i}"), 2021 + (i % 3) as u16, len, EN_WORDS, &mut rng);
        must_keep.insert(r.id.clone());
        records.push(r);
    }
    records.shuffle(&mut rng);

    let position = |id: &str| records.iter().position(|r| r.id == id).unwrap();
    for (a, b, tie) in pairs {
        // Ties keep the earlier record; otherwise the later year wins.
        let (winner, loser) = if tie && position(&a) < position(&b) { (a, b) } else { (b, a) };
        must_keep.insert(winner);
        must_drop.insert(loser);
    }
    Adversarial {
        records,
        must_keep,
        must_drop,
    }
}

fn cleaning_conservation() -> Outcome {
    let fixture = adversarial_fixture();
    ensure(fixture.records.len() == 1000, || format!("fixture has {} records", fixture.records.len()))?;
    let config = FilterConfig::default();
    let (out, stats) = clean(&fixture.records, &config);
    ensure(stats.input == 1000 && stats.retained + stats.dropped() == 1000, || format!("not conserved: {stats:?}"))?;
    let counts = (stats.missing_fields, stats.year, stats.length, stats.language, stats.duplicate, stats.retained);
    ensure(counts == (100, 100, 200, 100, 100, 400), || format!("unexpected counts {stats:?}"))?;
    let kept: HashSet<&str> = out.iter().map(|c| c.id.as_str()).collect();
    for id in &fixture.must_keep {
        ensure(kept.contains(id.as_str()), || format!("{id} was dropped"))?;
    }
    for id in &fixture.must_drop {
        ensure(!kept.contains(id.as_str()), || format!("{id} was retained"))?;
    }

    let again: Vec<RawCourse> = out.iter().cloned().map(RawCourse::from).collect();
    let (out2, stats2) = clean(&again, &config);
    ensure(out2 == out, || "second cleaning changed the output".into())?;
    ensure(stats2.retained == stats2.input && stats2.dropped() == 0, || format!("second pass dropped {stats2:?}"))?;
    Ok(format!(
        "retained {} + dropped {} = 1000; missing {}, year {}, length {}, language {}, duplicate {}",
        stats.retained,
        stats.dropped(),
        stats.missing_fields,
        stats.year,
        stats.length,
        stats.language,
        stats.duplicate
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("encoding round trip", encoding_round_trip),
        ("metric oracle equivalence", metric_oracle),
        ("hand-checkable metric case", hand_checked_metrics),
        ("parser robustness", parser_robustness),
        ("split law", split_law),
        ("gradient check", gradient_check),
        ("synthetic end-to-end", synthetic_end_to_end),
        ("comparison fixture", comparison_fixture),
        ("cleaning conservation", cleaning_conservation),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|payload| {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("PASS [{}] {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL [{}] {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
