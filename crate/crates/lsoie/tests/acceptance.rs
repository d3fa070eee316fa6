//! Acceptance suite. Each test prints one PASS/FAIL line (run with
//! `cargo test --test acceptance -- --nocapture` to see them); criterion 1
//! needs the public QA-SRL Bank 2.0 release and prints SKIP when
//! `QASRL_BANK_DIR` is not set.

mod common;

use std::fs;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lsoie::bio::{self, encode_bio, tags_to_extraction, EmissionMatrix, TransitionConstraints};
use lsoie::convert::{
    collect_position_stats, consolidate_answers, convert_corpus, DEFAULT_PRODUCT_CAP,
};
use lsoie::eval::{pr_curve, DependencyHeads, MatchingMode, PrPoint};
use lsoie::files::{write_extractions_tsv, ExtractionRow};
use lsoie::qasrl::{
    filter_crowdsourced, parse_corpus, AnswerJudgment, Domain, Partition, SentenceRecord, Span,
};
use lsoie::{Argument, Extraction};

use common::{
    enumerate_best_path, greedy_consolidation_sim, oracle_path_valid, random_corpus,
    random_emissions, random_eval_set, random_span_pool, rational_auc, CountPoint,
};

fn report(criterion: u32, name: &str, ok: bool, elapsed: Duration, detail: &str) {
    println!(
        "criterion {criterion} ({name}): {} in {:.2}s{}{}",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        if detail.is_empty() { "" } else { " — " },
        detail
    );
    assert!(ok, "criterion {criterion} ({name}) failed: {detail}");
}

fn convert_fixture(name: &str) -> (Vec<SentenceRecord>, Vec<Extraction>) {
    let corpus = parse_corpus(&common::fixture(name), Partition::Test).unwrap();
    let stats = collect_position_stats(&corpus.records);
    let (extractions, _) = convert_corpus(&corpus.records, &stats, DEFAULT_PRODUCT_CAP);
    (corpus.records, extractions)
}

// ---------------------------------------------------------------------------
// Criterion 1: dataset metrics on the public release (data-dependent)
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_dataset_metrics_on_release() {
    let start = Instant::now();
    let Some(root) = std::env::var_os("QASRL_BANK_DIR") else {
        println!(
            "criterion 1 (dataset metrics): SKIP — set QASRL_BANK_DIR to the QA-SRL Bank 2.0 \
             release (the directory holding orig/train.jsonl.gz etc.) to run"
        );
        return;
    };
    let root = PathBuf::from(root);

    let mut loaded: Vec<(String, Vec<SentenceRecord>)> = Vec::new();
    for partition in [Partition::Train, Partition::Dev, Partition::Test] {
        let mut found = None;
        for candidate in [
            root.join("orig").join(format!("{partition}.jsonl.gz")),
            root.join("orig").join(format!("{partition}.jsonl")),
            root.join(format!("{partition}.jsonl.gz")),
            root.join(format!("{partition}.jsonl")),
        ] {
            if candidate.exists() {
                found = Some(candidate);
                break;
            }
        }
        let path = found.unwrap_or_else(|| {
            panic!("criterion 1: no {partition} file under {}", root.display())
        });
        let corpus = parse_corpus(&path, partition).unwrap();
        let filtered = filter_crowdsourced(corpus.records, "turk-");
        println!(
            "criterion 1: {} -> partition {partition}: {} records after crowd filter",
            path.display(),
            filtered.records.len()
        );
        loaded.push((partition.to_string(), filtered.records));
    }

    // Per-partition statistics (the default mode), then per-domain totals
    // over all partitions.
    let mut counts: std::collections::BTreeMap<Domain, (std::collections::HashSet<String>, usize)> =
        Default::default();
    for (_, records) in &loaded {
        let stats = collect_position_stats(records);
        let (extractions, _) = convert_corpus(records, &stats, DEFAULT_PRODUCT_CAP);
        for ex in &extractions {
            let entry = counts
                .entry(Domain::of_sentence_id(&ex.sentence_id))
                .or_default();
            entry.0.insert(ex.sentence_id.clone());
            entry.1 += 1;
        }
    }

    let expect = [
        (Domain::Wiki, 24_296f64, 56_662f64, 2.3f64),
        (Domain::Sci, 47_998f64, 97_550f64, 2.0f64),
    ];
    let mut ok = true;
    let mut detail = String::new();
    for (domain, exp_sentences, exp_extractions, exp_ratio) in expect {
        let (sentences, extractions) = counts
            .get(&domain)
            .map(|(s, e)| (s.len() as f64, *e as f64))
            .unwrap_or((0.0, 0.0));
        let ratio = if sentences > 0.0 { extractions / sentences } else { 0.0 };
        let sentence_ok = (sentences - exp_sentences).abs() <= 0.02 * exp_sentences;
        let extraction_ok = (extractions - exp_extractions).abs() <= 0.02 * exp_extractions;
        let ratio_ok = (ratio - exp_ratio).abs() <= 0.1;
        ok &= sentence_ok && extraction_ok && ratio_ok;
        detail.push_str(&format!(
            "[{domain}: {sentences:.0} sents (exp {exp_sentences:.0} ±2%: {sentence_ok}), \
             {extractions:.0} ext (exp {exp_extractions:.0} ±2%: {extraction_ok}), \
             {ratio:.2} ext/sent (exp {exp_ratio} ±0.1: {ratio_ok})] "
        ));
    }
    report(1, "dataset metrics", ok, start.elapsed(), &detail);
}

// ---------------------------------------------------------------------------
// Criterion 2: Figure-2 sentence end to end
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_worked_example_tuple() {
    let start = Instant::now();
    let (records, extractions) = convert_fixture("provide.jsonl");
    let mut ok = extractions.len() == 1;
    let mut detail = format!("{} extraction(s)", extractions.len());
    if ok {
        let ex = &extractions[0];
        let tokens = &records[0].tokens;
        let tuple = ex.tuple_text(tokens);
        let args = ex.argument_texts(tokens);
        ok = tuple == "(physicians, provide, drugs, in Asian countries)"
            && args == ["physicians", "drugs", "in Asian countries"];
        detail = tuple;
    }
    let elapsed = start.elapsed();
    report(2, "worked-example tuple", ok && elapsed.as_secs() < 1, elapsed, &detail);
}

// ---------------------------------------------------------------------------
// Criterion 3: Table-2 sentences
// ---------------------------------------------------------------------------

#[test]
fn criterion_3_golden_example_tuples() {
    let start = Instant::now();
    let (records, extractions) = convert_fixture("golden.jsonl");
    let rendered: Vec<String> = extractions
        .iter()
        .map(|ex| {
            let tokens = &records
                .iter()
                .find(|r| r.sentence_id == ex.sentence_id)
                .unwrap()
                .tokens;
            ex.tuple_text(tokens)
        })
        .collect();
    let expected = [
        "(Bats, fly)",
        "(Greece, ranked, tenth)",
        "(Mao, elected, secretary of the Students Society, in 1915)",
        "(The proposed amendment, passed, both houses, in 2011)",
        "(males, monopolize, multiple females)",
        "(Animals, adapted, to live in the desert)",
    ];
    let mut ok = true;
    let mut missing = Vec::new();
    for tuple in expected {
        if !rendered.iter().any(|r| r == tuple) {
            ok = false;
            missing.push(tuple);
        }
    }
    let elapsed = start.elapsed();
    report(
        3,
        "golden example tuples",
        ok && elapsed.as_secs() < 1,
        elapsed,
        &if missing.is_empty() {
            format!("all {} tuples present", expected.len())
        } else {
            format!("missing: {missing:?}")
        },
    );
}

// ---------------------------------------------------------------------------
// Criterion 4: Viterbi vs. exhaustive enumeration, exact
// ---------------------------------------------------------------------------

#[test]
fn criterion_4_viterbi_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let constraints = TransitionConstraints::bio();
    let mut ok = true;
    let mut detail = String::new();
    for case in 0..200 {
        let len = rng.gen_range(1..=8);
        let rows = random_emissions(&mut rng, len);
        let emissions = EmissionMatrix::new(rows.clone()).unwrap();
        let (path, score) = bio::decode_viterbi(&emissions, &constraints).unwrap();
        let (_, oracle_score) = enumerate_best_path(&rows);
        let indices: Vec<usize> = path.iter().map(|t| t.index()).collect();
        if score != oracle_score || !oracle_path_valid(&indices) {
            ok = false;
            detail = format!(
                "case {case} (len {len}): viterbi {score} vs enumeration {oracle_score}, \
                 valid = {}",
                oracle_path_valid(&indices)
            );
            break;
        }
    }
    let elapsed = start.elapsed();
    report(
        4,
        "Viterbi enumeration oracle",
        ok && elapsed.as_secs() < 10,
        elapsed,
        &if detail.is_empty() {
            "200/200 exact, all paths BIO-valid".to_string()
        } else {
            detail
        },
    );
}

// ---------------------------------------------------------------------------
// Criterion 5: consolidation vs. the literal greedy simulation
// ---------------------------------------------------------------------------

#[test]
fn criterion_5_consolidation_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1905);
    let mut ok = true;
    let mut detail = String::new();
    for case in 0..500 {
        let pool = random_span_pool(&mut rng, 12, 8);
        let judgments: Vec<AnswerJudgment> = pool
            .chunks(3)
            .enumerate()
            .map(|(i, chunk)| AnswerJudgment {
                annotator_id: format!("turk-{i}"),
                is_valid: true,
                spans: chunk
                    .iter()
                    .map(|&(s, e)| Span { start: s, end: e })
                    .collect(),
            })
            .collect();
        let got: Vec<(usize, usize)> = consolidate_answers(&judgments)
            .unwrap()
            .into_iter()
            .map(|s| (s.start, s.end))
            .collect();
        let expected = greedy_consolidation_sim(&pool);
        if got != expected {
            ok = false;
            detail = format!("case {case}: pool {pool:?} -> {got:?}, oracle {expected:?}");
            break;
        }
    }
    let elapsed = start.elapsed();
    report(
        5,
        "consolidation greedy oracle",
        ok && elapsed.as_secs() < 5,
        elapsed,
        &if detail.is_empty() {
            "500/500 exact".to_string()
        } else {
            detail
        },
    );
}

// ---------------------------------------------------------------------------
// Criterion 6: evaluation arithmetic
// ---------------------------------------------------------------------------

/// Fixture producing exactly the points (r, p) = (0.2, 1.0), (0.5, 0.8),
/// (1.0, 0.5): 40 gold; confidence tiers of 8 correct, then 12 correct + 5
/// wrong, then 20 correct + 35 wrong.
fn three_point_fixture() -> (Vec<ExtractionRow>, Vec<ExtractionRow>) {
    let tokens: Vec<String> = ["crews", "launched", "probes", "."]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let extraction = |sid: String, predicate_index: usize, confidence: Option<f64>| Extraction {
        sentence_id: sid,
        predicate_index,
        predicate_text: tokens[predicate_index].clone(),
        arguments: vec![
            Argument {
                slot: 0,
                span: Span { start: 0, end: 1 },
            },
            Argument {
                slot: 1,
                span: Span { start: 2, end: 3 },
            },
        ],
        confidence,
    };
    let gold: Vec<ExtractionRow> = (0..40)
        .map(|i| ExtractionRow {
            tokens: tokens.clone(),
            extraction: extraction(format!("auc:{i}"), 1, None),
        })
        .collect();

    let mut preds = Vec::new();
    let correct = |range: std::ops::Range<usize>, conf: f64, preds: &mut Vec<ExtractionRow>| {
        for i in range {
            preds.push(ExtractionRow {
                tokens: tokens.clone(),
                extraction: extraction(format!("auc:{i}"), 1, Some(conf)),
            });
        }
    };
    let wrong = |n: usize, conf: f64, preds: &mut Vec<ExtractionRow>| {
        for i in 0..n {
            // Same sentences, wrong predicate token: never matches.
            preds.push(ExtractionRow {
                tokens: tokens.clone(),
                extraction: extraction(format!("auc:{}", i % 40), 2, Some(conf)),
            });
        }
    };
    correct(0..8, -0.1, &mut preds);
    correct(8..20, -0.5, &mut preds);
    wrong(5, -0.5, &mut preds);
    correct(20..40, -1.0, &mut preds);
    wrong(35, -1.0, &mut preds);
    (preds, gold)
}

#[test]
fn criterion_6_evaluation_arithmetic() {
    let start = Instant::now();
    let heads = DependencyHeads::new();

    // Three-point synthetic curve: AUC = 0.795 within 1e-9 by hand and by
    // the exact rational oracle.
    let (preds, gold) = three_point_fixture();
    let curve = pr_curve(&preds, &gold, &heads, MatchingMode::Positional).unwrap();
    let expected_points = [
        PrPoint { threshold: -0.1, precision: 1.0, recall: 0.2 },
        PrPoint { threshold: -0.5, precision: 0.8, recall: 0.5 },
        PrPoint { threshold: -1.0, precision: 0.5, recall: 1.0 },
    ];
    let mut ok = curve.points.len() == 3;
    for (got, want) in curve.points.iter().zip(&expected_points) {
        ok &= got.threshold == want.threshold
            && (got.precision - want.precision).abs() < 1e-12
            && (got.recall - want.recall).abs() < 1e-12;
    }
    let auc_ok = (curve.auc - 0.795).abs() <= 1e-9;
    let rational = rational_auc(&[
        CountPoint { matched: 8, kept: 8, gold: 40 },
        CountPoint { matched: 20, kept: 25, gold: 40 },
        CountPoint { matched: 40, kept: 80, gold: 40 },
    ]);
    let rational_ok = (curve.auc - rational).abs() <= 1e-9;

    // Perfect-system fixture: exact (1.0, 1.0).
    let perfect_gold: Vec<ExtractionRow> = gold[..5].to_vec();
    let perfect_preds: Vec<ExtractionRow> = perfect_gold
        .iter()
        .map(|g| {
            let mut p = g.clone();
            p.extraction.confidence = Some(-0.3);
            p
        })
        .collect();
    let perfect = pr_curve(&perfect_preds, &perfect_gold, &heads, MatchingMode::Positional).unwrap();
    let perfect_ok = perfect.max_f1 == 1.0 && perfect.auc == 1.0;

    let elapsed = start.elapsed();
    report(
        6,
        "evaluation arithmetic",
        ok && auc_ok && rational_ok && perfect_ok && elapsed.as_secs() < 1,
        elapsed,
        &format!(
            "auc {} (hand 0.795, rational {rational}), perfect ({}, {})",
            curve.auc, perfect.max_f1, perfect.auc
        ),
    );
}

// ---------------------------------------------------------------------------
// Criterion 7: property suites
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_property_suites() {
    let start = Instant::now();
    let mut failures: Vec<String> = Vec::new();

    // Corpora: all fixtures plus a seeded random corpus.
    let mut corpora: Vec<(String, Vec<SentenceRecord>)> = Vec::new();
    for name in ["provide.jsonl", "golden.jsonl", "domains.jsonl"] {
        let corpus = parse_corpus(&common::fixture(name), Partition::Test).unwrap();
        corpora.push((name.to_string(), corpus.records));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    corpora.push(("random-300".into(), random_corpus(&mut rng, 300)));

    let mut extraction_total = 0usize;
    for (name, records) in &corpora {
        let stats = collect_position_stats(records);

        // q-position normalization.
        for (form, probs) in stats.to_normalized() {
            let total: f64 = probs.iter().sum();
            if (total - 1.0).abs() >= 1e-9 {
                failures.push(format!("{name}: q({form}) sums to {total}"));
            }
        }

        let (extractions, _) = convert_corpus(records, &stats, DEFAULT_PRODUCT_CAP);
        extraction_total += extractions.len();
        for ex in &extractions {
            // Argument non-overlap over the entire converted corpus.
            if let Err(e) = ex.check() {
                failures.push(format!("{name}: {e}"));
            }
            // Encode/decode round-trip identity on every extraction.
            let record = records
                .iter()
                .find(|r| r.sentence_id == ex.sentence_id)
                .unwrap();
            match encode_bio(record, ex).and_then(|tags| {
                tags_to_extraction(&tags, &record.tokens).map(|back| (tags, back))
            }) {
                Ok((_, back)) => {
                    if back.arguments != ex.arguments || back.predicate_index != ex.predicate_index
                    {
                        failures.push(format!("{name}: round-trip mismatch in {}", ex.sentence_id));
                    }
                }
                Err(e) => failures.push(format!("{name}: {e} in {}", ex.sentence_id)),
            }
        }
    }

    // Threshold-sweep monotonicity and ranking invariance on seeded sets.
    let heads = DependencyHeads::new();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for case in 0..50 {
        let (preds, gold) = random_eval_set(&mut rng);
        if preds.is_empty() {
            continue;
        }
        let curve = pr_curve(&preds, &gold, &heads, MatchingMode::Positional).unwrap();
        for pair in curve.points.windows(2) {
            if pair[0].recall > pair[1].recall {
                failures.push(format!("case {case}: recall rises with threshold"));
            }
        }
        for transform in [|c: f64| 3.0 * c + 1.0, f64::tanh] {
            let mut scaled = preds.clone();
            for p in &mut scaled {
                p.extraction.confidence = p.extraction.confidence.map(transform);
            }
            let scaled_curve = pr_curve(&scaled, &gold, &heads, MatchingMode::Positional).unwrap();
            let key = |c: &lsoie::eval::PrCurve| -> Vec<(f64, f64)> {
                c.points.iter().map(|p| (p.precision, p.recall)).collect()
            };
            if key(&curve) != key(&scaled_curve) {
                failures.push(format!("case {case}: PR points changed under transform"));
            }
        }
    }

    let elapsed = start.elapsed();
    report(
        7,
        "property suites",
        failures.is_empty(),
        elapsed,
        &if failures.is_empty() {
            format!("{extraction_total} extractions checked, 50 eval sets swept")
        } else {
            failures.join("; ")
        },
    );
}

// ---------------------------------------------------------------------------
// Criterion 8: the harness accepts arbitrary external prediction files
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_external_prediction_file() {
    let start = Instant::now();
    let dir = std::env::temp_dir().join(format!("lsoie-acc8-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();

    // Gold: the converted golden fixture.
    let (records, extractions) = convert_fixture("golden.jsonl");
    let gold_rows: Vec<ExtractionRow> = extractions
        .iter()
        .map(|ex| ExtractionRow {
            tokens: records
                .iter()
                .find(|r| r.sentence_id == ex.sentence_id)
                .unwrap()
                .tokens
                .clone(),
            extraction: ex.clone(),
        })
        .collect();
    let gold_path = dir.join("gold.tsv");
    let mut gold_file = fs::File::create(&gold_path).unwrap();
    write_extractions_tsv(&mut gold_file, &gold_rows).unwrap();

    // An "externally produced" prediction file: unknown sentences, extra
    // argument slots, tied and positive confidences, argument-free lines.
    let pred_path = dir.join("pred.tsv");
    fs::write(
        &pred_path,
        "Wiki1k:wikipedia:gold:0\tBats are the only mammals that can truly fly .\t8\tA0:0-1\t-0.25\n\
         Wiki1k:wikipedia:gold:0\tBats are the only mammals that can truly fly .\t8\tA0:0-5 A1:6-8 A2:9-10\t-0.25\n\
         unknown:99\tsome other sentence entirely .\t1\tA0:0-1 A1:3-4\t0.75\n\
         Wiki1k:wikipedia:gold:1\tGreece moved up three to be ranked tenth .\t6\tA0:0-1 A1:7-8 A2:2-3 A3:4-5\t-3.5\n\
         Wiki1k:wikipedia:gold:3\tThe proposed amendment already passed both houses in 2011 .\t4\t\t-0.25\n\
         Wiki1k:wikipedia:gold:4\tIn polygynous species , males try to monopolize and mate with multiple females .\t7\tA0:4-5 A1:11-13\t1000\n",
    )
    .unwrap();

    let out = dir.join("eval");
    let output = std::process::Command::new(env!("CARGO_BIN_EXE_lsoie"))
        .args([
            "eval",
            "--gold",
            gold_path.to_str().unwrap(),
            "--pred",
            pred_path.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();

    let mut ok = output.status.success();
    let detail;
    if !ok {
        detail = String::from_utf8_lossy(&output.stderr).to_string();
    } else {
        let summary: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
        let csv = fs::read_to_string(out.join("pr_curve.csv")).unwrap();
        // Full curve: one point per distinct confidence (4 here), plus the
        // summary carrying max-F1 and AUC.
        ok = csv.lines().count() == 5
            && summary["max_f1"].is_number()
            && summary["auc"].is_number()
            && summary["f1_at_zero"].is_number();
        detail = format!(
            "max_f1 {}, auc {}, {} curve points",
            summary["max_f1"],
            summary["auc"],
            csv.lines().count() - 1
        );
    }
    let elapsed = start.elapsed();
    report(8, "external prediction file", ok, elapsed, &detail);
}
