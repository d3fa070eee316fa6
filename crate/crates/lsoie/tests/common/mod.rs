//! Shared oracles and generators for the integration and acceptance suites.
//! Everything here is written independently of the library's implementation
//! paths (fresh BIO transition rules, literal greedy simulation, exact
//! rational arithmetic) so that agreement is meaningful.

#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

// ---------------------------------------------------------------------------
// Greedy consolidation simulation
// ---------------------------------------------------------------------------

fn span_overlaps(a: (usize, usize), b: (usize, usize)) -> bool {
    a.0 < b.1 && b.0 < a.1
}

/// Literal simulation of the consolidation rule: from the deduplicated pool,
/// repeatedly draw the longest span that does not overlap a previously drawn
/// one (earlier start on length ties) until none can be drawn. Returns the
/// drawn set sorted by start.
pub fn greedy_consolidation_sim(pool: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut remaining: Vec<(usize, usize)> = pool.to_vec();
    remaining.sort();
    remaining.dedup();
    let mut drawn: Vec<(usize, usize)> = Vec::new();
    loop {
        let mut choice: Option<(usize, usize)> = None;
        for &candidate in &remaining {
            if drawn.iter().any(|&d| span_overlaps(d, candidate)) {
                continue;
            }
            let better = match choice {
                None => true,
                Some(current) => {
                    let (cl, nl) = (current.1 - current.0, candidate.1 - candidate.0);
                    nl > cl || (nl == cl && candidate.0 < current.0)
                }
            };
            if better {
                choice = Some(candidate);
            }
        }
        match choice {
            Some(c) => {
                drawn.push(c);
                remaining.retain(|&s| s != c);
            }
            None => break,
        }
    }
    drawn.sort();
    drawn
}

/// Random span pool of up to `max_spans` spans over `tokens` tokens.
pub fn random_span_pool<R: Rng>(rng: &mut R, tokens: usize, max_spans: usize) -> Vec<(usize, usize)> {
    let n = rng.gen_range(1..=max_spans);
    (0..n)
        .map(|_| {
            let start = rng.gen_range(0..tokens - 1);
            let len = rng.gen_range(1..=4.min(tokens - start));
            (start, start + len)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Exhaustive Viterbi oracle
// ---------------------------------------------------------------------------

/// Tag-state space in canonical index order: O, B-P, I-P, B-A0, I-A0, ...,
/// B-A5, I-A5 (15 states). The BIO rules are restated here from scratch.
pub const ORACLE_STATES: usize = 15;

fn oracle_is_inside(state: usize) -> bool {
    state == 2 || (state >= 3 && (state - 3) % 2 == 1)
}

fn oracle_begin_of(inside: usize) -> usize {
    // I-P (2) continues B-P (1); I-Ak (4+2k) continues B-Ak (3+2k).
    inside - 1
}

fn oracle_transition_ok(from: usize, to: usize) -> bool {
    if oracle_is_inside(to) {
        from == oracle_begin_of(to) || from == to
    } else {
        true
    }
}

fn oracle_start_ok(state: usize) -> bool {
    !oracle_is_inside(state)
}

/// Check BIO validity of a path of canonical state indices.
pub fn oracle_path_valid(path: &[usize]) -> bool {
    if path.is_empty() {
        return false;
    }
    if !oracle_start_ok(path[0]) {
        return false;
    }
    path.windows(2).all(|w| oracle_transition_ok(w[0], w[1]))
}

/// Enumerate every BIO-valid state sequence of the emission length and
/// return the maximum total emission score with its (first-found, hence
/// lexicographically smallest) argmax path.
pub fn enumerate_best_path(emissions: &[Vec<f64>]) -> (Vec<usize>, f64) {
    assert!(!emissions.is_empty());
    let successors: Vec<Vec<usize>> = (0..ORACLE_STATES)
        .map(|from| {
            (0..ORACLE_STATES)
                .filter(|&to| oracle_transition_ok(from, to))
                .collect()
        })
        .collect();

    let mut best_score = f64::NEG_INFINITY;
    let mut best_path: Vec<usize> = Vec::new();
    let mut path: Vec<usize> = Vec::with_capacity(emissions.len());

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        t: usize,
        state: usize,
        score: f64,
        emissions: &[Vec<f64>],
        successors: &[Vec<usize>],
        path: &mut Vec<usize>,
        best_score: &mut f64,
        best_path: &mut Vec<usize>,
    ) {
        let score = score + emissions[t][state];
        path.push(state);
        if t + 1 == emissions.len() {
            if score > *best_score {
                *best_score = score;
                best_path.clone_from(path);
            }
        } else {
            for &next in &successors[state] {
                dfs(
                    t + 1,
                    next,
                    score,
                    emissions,
                    successors,
                    path,
                    best_score,
                    best_path,
                );
            }
        }
        path.pop();
    }

    for state in 0..ORACLE_STATES {
        if oracle_start_ok(state) {
            dfs(
                0,
                state,
                0.0,
                emissions,
                &successors,
                &mut path,
                &mut best_score,
                &mut best_path,
            );
        }
    }
    (best_path, best_score)
}

/// Random normalized emission matrix (rows are log-probabilities).
pub fn random_emissions<R: Rng>(rng: &mut R, len: usize) -> Vec<Vec<f64>> {
    (0..len)
        .map(|_| {
            let weights: Vec<f64> = (0..ORACLE_STATES)
                .map(|_| rng.gen_range(0.01f64..1.0))
                .collect();
            let total: f64 = weights.iter().sum();
            weights.iter().map(|w| (w / total).ln()).collect()
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Exact rational trapezoid oracle
// ---------------------------------------------------------------------------

/// A PR point expressed in integer counts: `matched` of `kept` predictions,
/// over `gold` gold extractions.
#[derive(Debug, Clone, Copy)]
pub struct CountPoint {
    pub matched: i128,
    pub kept: i128,
    pub gold: i128,
}

#[derive(Debug, Clone, Copy)]
struct Fraction {
    num: i128,
    den: i128,
}

impl Fraction {
    fn new(num: i128, den: i128) -> Self {
        assert!(den != 0);
        let g = gcd(num.abs().max(1), den.abs());
        let sign = if den < 0 { -1 } else { 1 };
        Fraction {
            num: sign * num / g,
            den: sign * den / g,
        }
    }

    fn add(self, other: Fraction) -> Fraction {
        Fraction::new(
            self.num * other.den + other.num * self.den,
            self.den * other.den,
        )
    }

    fn sub(self, other: Fraction) -> Fraction {
        Fraction::new(
            self.num * other.den - other.num * self.den,
            self.den * other.den,
        )
    }

    fn mul(self, other: Fraction) -> Fraction {
        Fraction::new(self.num * other.num, self.den * other.den)
    }

    fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Exact trapezoid area over recall for points in sweep order (threshold
/// descending), extended to recall 0 at the first point's precision —
/// computed entirely in rational arithmetic.
pub fn rational_auc(points: &[CountPoint]) -> f64 {
    assert!(!points.is_empty());
    let precision = |p: &CountPoint| {
        if p.kept == 0 {
            Fraction::new(1, 1)
        } else {
            Fraction::new(p.matched, p.kept)
        }
    };
    let recall = |p: &CountPoint| Fraction::new(p.matched, p.gold);

    let first = &points[0];
    let mut area = recall(first).mul(precision(first));
    for pair in points.windows(2) {
        let width = recall(&pair[1]).sub(recall(&pair[0]));
        let mean = precision(&pair[0])
            .add(precision(&pair[1]))
            .mul(Fraction::new(1, 2));
        area = area.add(width.mul(mean));
    }
    area.to_f64()
}

// ---------------------------------------------------------------------------
// Brute-force bipartite matching
// ---------------------------------------------------------------------------

/// Maximum one-to-one matching size by exhaustive assignment search.
/// `compatible[p][g]` says prediction p may match gold g. Only usable for
/// small fixtures.
pub fn max_bipartite_matching(compatible: &[Vec<bool>]) -> usize {
    fn search(p: usize, compatible: &[Vec<bool>], used: &mut Vec<bool>) -> usize {
        if p == compatible.len() {
            return 0;
        }
        // Skip prediction p.
        let mut best = search(p + 1, compatible, used);
        for g in 0..used.len() {
            if compatible[p][g] && !used[g] {
                used[g] = true;
                best = best.max(1 + search(p + 1, compatible, used));
                used[g] = false;
            }
        }
        best
    }
    let golds = compatible.first().map_or(0, Vec::len);
    search(0, compatible, &mut vec![false; golds])
}

// ---------------------------------------------------------------------------
// Random corpus generator
// ---------------------------------------------------------------------------

use lsoie::convert::{Argument, Extraction};
use lsoie::files::ExtractionRow;
use lsoie::qasrl::{
    AnswerJudgment, QuestionLabel, QuestionSlots, SentenceRecord, Span, TenseMarker, VerbEntry,
};

const WH_WORDS: &[&str] = &["who", "what", "when", "where", "why", "how"];

/// Random gold set and prediction set for evaluation properties. Prediction
/// confidences sit on a 0.01 grid in [-5, 0] so strictly increasing
/// transforms keep distinct values distinct in f64.
pub fn random_eval_set<R: Rng>(rng: &mut R) -> (Vec<ExtractionRow>, Vec<ExtractionRow>) {
    let tokens: Vec<String> = ["the", "crew", "launched", "a", "probe", "yesterday", "."]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let gold_extraction = |sid: String| Extraction {
        sentence_id: sid,
        predicate_index: 2,
        predicate_text: "launched".into(),
        arguments: vec![
            Argument {
                slot: 0,
                span: Span { start: 0, end: 2 },
            },
            Argument {
                slot: 1,
                span: Span { start: 3, end: 5 },
            },
        ],
        confidence: None,
    };

    let sentences = rng.gen_range(1..=6);
    let mut gold = Vec::new();
    let mut preds = Vec::new();
    for s in 0..sentences {
        let sid = format!("ev:{s}");
        gold.push(ExtractionRow {
            tokens: tokens.clone(),
            extraction: gold_extraction(sid.clone()),
        });
        for _ in 0..rng.gen_range(0..=3) {
            let mut extraction = gold_extraction(sid.clone());
            match rng.gen_range(0..3) {
                // Correct prediction.
                0 => {}
                // Wrong predicate token.
                1 => extraction.predicate_index = 4,
                // a0/a1 swapped.
                _ => {
                    extraction.arguments[0].span = Span { start: 3, end: 5 };
                    extraction.arguments[1].span = Span { start: 0, end: 2 };
                }
            }
            extraction.confidence = Some(-(rng.gen_range(0..=500) as f64) / 100.0);
            preds.push(ExtractionRow {
                tokens: tokens.clone(),
                extraction,
            });
        }
    }
    (preds, gold)
}

/// A randomized but structurally valid corpus exercising the conversion
/// pipeline: random spans, occasional invalid judgments, shared question
/// forms across verbs.
pub fn random_corpus<R: Rng>(rng: &mut R, sentences: usize) -> Vec<SentenceRecord> {
    (0..sentences)
        .map(|i| {
            let token_count = rng.gen_range(8..14);
            let tokens: Vec<String> = (0..token_count).map(|t| format!("w{t}")).collect();
            let predicate_index = rng.gen_range(0..token_count);
            let question_count = rng.gen_range(1..=4);
            let mut questions = Vec::new();
            for q in 0..question_count {
                let wh = WH_WORDS[rng.gen_range(0..WH_WORDS.len())];
                let aux = if rng.gen_bool(0.5) { "did" } else { "_" };
                let judgments = (0..3)
                    .map(|a| {
                        let valid = rng.gen_bool(0.85);
                        let spans = if valid {
                            (0..rng.gen_range(1..=2))
                                .map(|_| {
                                    let start = rng.gen_range(0..token_count - 1);
                                    let len = rng.gen_range(1..=3.min(token_count - start));
                                    Span {
                                        start,
                                        end: start + len,
                                    }
                                })
                                .collect()
                        } else {
                            Vec::new()
                        };
                        AnswerJudgment {
                            annotator_id: format!("turk-{a}"),
                            is_valid: valid,
                            spans,
                        }
                    })
                    .collect();
                questions.push(QuestionLabel {
                    question_text: format!("{wh} q{q}?"),
                    slots: QuestionSlots {
                        wh: wh.to_string(),
                        aux: aux.to_string(),
                        subj: "_".into(),
                        verb: "stem".into(),
                        obj: if rng.gen_bool(0.5) {
                            "something".into()
                        } else {
                            "_".into()
                        },
                        prep: "_".into(),
                        obj2: "_".into(),
                    },
                    tense: TenseMarker {
                        tense: "past".into(),
                        ..TenseMarker::default()
                    },
                    sources: vec!["turk-gen".into()],
                    judgments,
                });
            }
            SentenceRecord {
                sentence_id: format!("rand:{i}"),
                tokens,
                verb_entries: vec![VerbEntry {
                    predicate_index,
                    verb_forms: Default::default(),
                    questions,
                }],
            }
        })
        .collect()
}
