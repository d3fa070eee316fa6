//! Matching predicted extractions against gold and sweeping confidence
//! thresholds into precision-recall curves.
//!
//! A prediction matches a gold extraction when both anchor the same
//! predicate token and, for every gold argument, the predicted argument in
//! the same slot contains the gold argument's syntactic head. Heads come
//! from an ingested dependency parse (CoNLL-U); without one, a closed-class
//! stop-list heuristic picks a head token and the fallback is counted.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::convert::Extraction;
use crate::files::{open_text, ExtractionRow};
use crate::qasrl::Span;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("gold set is empty")]
    NoGold,
    #[error("prediction for {sentence_id} has no confidence score")]
    MissingConfidence { sentence_id: String },
    #[error("{path}:{line}: {message}")]
    MalformedFile {
        path: String,
        line: usize,
        message: String,
    },
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

// ---------------------------------------------------------------------------
// Dependency heads
// ---------------------------------------------------------------------------

/// Per-sentence dependency head indices (0-based; `None` marks the root).
#[derive(Debug, Clone, Default)]
pub struct DependencyHeads {
    sentences: HashMap<String, Vec<Option<usize>>>,
}

impl DependencyHeads {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, sentence_id: &str) -> Option<&[Option<usize>]> {
        self.sentences.get(sentence_id).map(|v| v.as_slice())
    }

    pub fn insert(&mut self, sentence_id: String, heads: Vec<Option<usize>>) {
        self.sentences.insert(sentence_id, heads);
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Read heads from a CoNLL-U file. Only the ID, FORM and HEAD columns
    /// are used; multiword-token and empty-node lines are skipped. Sentences
    /// are keyed by their `# sent_id = ...` comment; blocks without one are
    /// skipped with a warning.
    pub fn from_conllu(path: &Path) -> Result<DependencyHeads, EvalError> {
        let reader = open_text(path).map_err(|source| EvalError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut out = DependencyHeads::new();
        let mut sent_id: Option<String> = None;
        let mut heads: Vec<Option<usize>> = Vec::new();

        let mut flush = |sent_id: &mut Option<String>, heads: &mut Vec<Option<usize>>| {
            if heads.is_empty() {
                return;
            }
            match sent_id.take() {
                Some(id) => {
                    out.sentences.insert(id, std::mem::take(heads));
                }
                None => {
                    log::warn!("CoNLL-U block without sent_id skipped");
                    heads.clear();
                }
            }
        };

        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|source| EvalError::Io {
                path: path.display().to_string(),
                source,
            })?;
            let trimmed = line.trim_end();
            if trimmed.is_empty() {
                flush(&mut sent_id, &mut heads);
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("sent_id") {
                    if let Some(v) = v.trim_start().strip_prefix('=') {
                        sent_id = Some(v.trim().to_string());
                    }
                }
                continue;
            }
            let cols: Vec<&str> = trimmed.split('\t').collect();
            if cols.len() < 7 {
                return Err(EvalError::MalformedFile {
                    path: path.display().to_string(),
                    line: line_no,
                    message: format!("expected >= 7 columns, found {}", cols.len()),
                });
            }
            // Skip ranges (1-2) and empty nodes (1.1).
            if cols[0].contains('-') || cols[0].contains('.') {
                continue;
            }
            let head = match cols[6] {
                "_" | "0" => None,
                h => Some(h.parse::<usize>().map_err(|_| EvalError::MalformedFile {
                    path: path.display().to_string(),
                    line: line_no,
                    message: format!("HEAD column is not a number: {h:?}"),
                })? - 1),
            };
            heads.push(head);
        }
        flush(&mut sent_id, &mut heads);
        Ok(out)
    }
}

/// Closed-class tokens never chosen by the head fallback heuristic.
const HEAD_STOP_LIST: &[&str] = &[
    // determiners
    "the", "a", "an", "this", "that", "these", "those", "some", "any", "no", "every", "each",
    // adpositions
    "in", "on", "at", "of", "to", "for", "with", "by", "from", "about", "as", "into", "onto",
    "over", "under", "between", "through", "during", "against", "among", "within", "without",
    "before", "after", "above", "below", "off", "up", "down", "near",
    // conjunctions
    "and", "or", "but", "nor", "so", "yet", "because", "although", "while", "if", "than",
    // auxiliaries
    "is", "are", "was", "were", "be", "been", "being", "am", "do", "does", "did", "have", "has",
    "had", "will", "would", "can", "could", "shall", "should", "may", "might", "must",
];

/// Pick the syntactic head of a span: the leftmost token whose dependency
/// head lies outside the span (or is the root). Without a parse — or if the
/// parse yields no candidate — fall back to the rightmost token not on the
/// closed-class stop list (rightmost token overall if all are). Returns the
/// head index and whether the fallback was used.
pub fn argument_head(
    span: Span,
    heads: Option<&[Option<usize>]>,
    tokens: &[String],
) -> (usize, bool) {
    if let Some(heads) = heads {
        if span.end <= heads.len() {
            for (offset, head) in heads[span.start..span.end].iter().enumerate() {
                let t = span.start + offset;
                match head {
                    None => return (t, false),
                    Some(h) if !span.contains(*h) => return (t, false),
                    Some(_) => {}
                }
            }
        }
    }
    let mut candidate = None;
    for t in (span.start..span.end).rev() {
        let token = tokens.get(t).map(|s| s.to_ascii_lowercase());
        if let Some(token) = token {
            if !HEAD_STOP_LIST.contains(&token.as_str()) {
                candidate = Some(t);
                break;
            }
        }
    }
    (candidate.unwrap_or(span.end - 1), true)
}

// ---------------------------------------------------------------------------
// Matching
// ---------------------------------------------------------------------------

/// Which predicted slot may satisfy a gold argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MatchingMode {
    /// Gold slot i must be covered by predicted slot i.
    Positional,
    /// Any predicted argument may cover a gold argument (lenient).
    Lenient,
}

/// Outcome of matching one prediction against one gold extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchDecision {
    pub matched: bool,
    pub predicate_equal: bool,
    /// Head containment per gold argument, in gold slot order.
    pub argument_head_contained: Vec<bool>,
    /// How many gold-argument heads were resolved by the fallback heuristic.
    pub head_fallbacks: usize,
}

/// Match a prediction against a gold extraction from the same sentence:
/// predicates must anchor the same token, and every gold argument's head
/// must be contained in the corresponding predicted argument. Extra
/// predicted arguments beyond the gold arity do not block a match.
pub fn match_extractions(
    pred: &Extraction,
    gold: &Extraction,
    gold_tokens: &[String],
    heads: Option<&[Option<usize>]>,
    mode: MatchingMode,
) -> MatchDecision {
    let predicate_equal = pred.predicate_index == gold.predicate_index;
    let mut head_fallbacks = 0usize;
    let argument_head_contained: Vec<bool> = gold
        .arguments
        .iter()
        .map(|gold_arg| {
            let (head, fallback) = argument_head(gold_arg.span, heads, gold_tokens);
            if fallback {
                head_fallbacks += 1;
            }
            match mode {
                MatchingMode::Positional => pred
                    .arguments
                    .iter()
                    .find(|a| a.slot == gold_arg.slot)
                    .is_some_and(|a| a.span.contains(head)),
                MatchingMode::Lenient => {
                    pred.arguments.iter().any(|a| a.span.contains(head))
                }
            }
        })
        .collect();
    let matched = predicate_equal && argument_head_contained.iter().all(|&c| c);
    MatchDecision {
        matched,
        predicate_equal,
        argument_head_contained,
        head_fallbacks,
    }
}

// ---------------------------------------------------------------------------
// Threshold sweep
// ---------------------------------------------------------------------------

/// Result of greedily assigning predictions to gold extractions.
#[derive(Debug, Clone)]
pub struct Assignments {
    /// For each prediction (input order): the matched gold index, if any.
    pub matched_gold: Vec<Option<usize>>,
    pub head_fallbacks: usize,
}

/// Greedy one-to-one assignment: predictions in descending confidence order
/// (ties by input order) each claim the first unclaimed gold extraction of
/// their sentence they match. Because lower-confidence predictions never
/// displace higher-confidence ones, restricting the result to any
/// confidence prefix reproduces the greedy assignment on that prefix.
pub fn assign_predictions(
    predictions: &[ExtractionRow],
    gold: &[ExtractionRow],
    heads: &DependencyHeads,
    mode: MatchingMode,
) -> Result<Assignments, EvalError> {
    let mut gold_by_sentence: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, row) in gold.iter().enumerate() {
        gold_by_sentence
            .entry(row.extraction.sentence_id.as_str())
            .or_default()
            .push(i);
    }

    let mut order: Vec<usize> = (0..predictions.len()).collect();
    for row in predictions {
        if row.extraction.confidence.is_none() {
            return Err(EvalError::MissingConfidence {
                sentence_id: row.extraction.sentence_id.clone(),
            });
        }
    }
    order.sort_by(|&a, &b| {
        let ca = predictions[a].extraction.confidence.unwrap();
        let cb = predictions[b].extraction.confidence.unwrap();
        cb.total_cmp(&ca).then(a.cmp(&b))
    });

    let mut taken = vec![false; gold.len()];
    let mut matched_gold = vec![None; predictions.len()];
    let mut head_fallbacks = 0usize;
    for &p in &order {
        let pred_row = &predictions[p];
        let Some(candidates) =
            gold_by_sentence.get(pred_row.extraction.sentence_id.as_str())
        else {
            continue;
        };
        for &g in candidates {
            if taken[g] {
                continue;
            }
            let gold_row = &gold[g];
            let decision = match_extractions(
                &pred_row.extraction,
                &gold_row.extraction,
                &gold_row.tokens,
                heads.get(&gold_row.extraction.sentence_id),
                mode,
            );
            head_fallbacks += decision.head_fallbacks;
            if decision.matched {
                taken[g] = true;
                matched_gold[p] = Some(g);
                break;
            }
        }
    }
    Ok(Assignments {
        matched_gold,
        head_fallbacks,
    })
}

/// Precision and recall keeping only predictions with confidence >= t.
/// An empty kept set scores precision 1.0 by convention so the curve is
/// total. `gold` must be non-empty.
pub fn score_at_threshold(
    predictions: &[ExtractionRow],
    gold: &[ExtractionRow],
    heads: &DependencyHeads,
    mode: MatchingMode,
    threshold: f64,
) -> Result<(f64, f64), EvalError> {
    if gold.is_empty() {
        return Err(EvalError::NoGold);
    }
    let assignments = assign_predictions(predictions, gold, heads, mode)?;
    Ok(score_from_assignments(
        predictions,
        &assignments,
        gold.len(),
        threshold,
    ))
}

fn score_from_assignments(
    predictions: &[ExtractionRow],
    assignments: &Assignments,
    gold_count: usize,
    threshold: f64,
) -> (f64, f64) {
    let mut kept = 0usize;
    let mut matched = 0usize;
    for (i, row) in predictions.iter().enumerate() {
        if row.extraction.confidence.unwrap_or(f64::NEG_INFINITY) >= threshold {
            kept += 1;
            if assignments.matched_gold[i].is_some() {
                matched += 1;
            }
        }
    }
    let precision = if kept == 0 {
        1.0
    } else {
        matched as f64 / kept as f64
    };
    let recall = matched as f64 / gold_count as f64;
    (precision, recall)
}

// ---------------------------------------------------------------------------
// PR curve
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

impl PrPoint {
    pub fn f1(&self) -> f64 {
        if self.precision + self.recall == 0.0 {
            0.0
        } else {
            2.0 * self.precision * self.recall / (self.precision + self.recall)
        }
    }
}

/// A confidence threshold sweep: one point per distinct confidence, ordered
/// by descending threshold (recall ascending), with max-F1 and the area
/// under the precision-recall points.
#[derive(Debug, Clone, PartialEq)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
    pub max_f1: f64,
    pub auc: f64,
    pub head_fallbacks: usize,
}

/// Trapezoidal area over recall, with the curve extended from the
/// highest-threshold point down to recall 0 at that point's precision.
/// `points` must be in sweep order (threshold descending).
pub fn auc_from_points(points: &[PrPoint]) -> f64 {
    let Some(first) = points.first() else {
        return 0.0;
    };
    let mut area = first.recall * first.precision;
    for pair in points.windows(2) {
        let (prev, next) = (pair[0], pair[1]);
        area += (next.recall - prev.recall) * (prev.precision + next.precision) / 2.0;
    }
    area
}

/// Sweep all distinct confidence values as thresholds. Matching decisions
/// are computed once and reused across thresholds.
pub fn pr_curve(
    predictions: &[ExtractionRow],
    gold: &[ExtractionRow],
    heads: &DependencyHeads,
    mode: MatchingMode,
) -> Result<PrCurve, EvalError> {
    if gold.is_empty() {
        return Err(EvalError::NoGold);
    }
    let assignments = assign_predictions(predictions, gold, heads, mode)?;

    let mut thresholds: Vec<f64> = predictions
        .iter()
        .map(|r| r.extraction.confidence.unwrap())
        .collect();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();

    let points: Vec<PrPoint> = thresholds
        .into_iter()
        .map(|threshold| {
            let (precision, recall) =
                score_from_assignments(predictions, &assignments, gold.len(), threshold);
            PrPoint {
                threshold,
                precision,
                recall,
            }
        })
        .collect();

    let max_f1 = points.iter().map(PrPoint::f1).fold(0.0, f64::max);
    let auc = auc_from_points(&points);
    Ok(PrCurve {
        points,
        max_f1,
        auc,
        head_fallbacks: assignments.head_fallbacks,
    })
}

/// Machine-readable evaluation summary written next to the curve CSV.
#[derive(Debug, Clone, Serialize)]
pub struct EvalSummary {
    pub max_f1: f64,
    pub f1_at_zero: f64,
    pub auc: f64,
    pub num_predictions: usize,
    pub num_gold: usize,
    pub matched_at_min_threshold: usize,
    pub head_fallbacks: usize,
    pub matching_mode: String,
}

/// Compute the curve plus the fixed-operating-point summary.
pub fn evaluate(
    predictions: &[ExtractionRow],
    gold: &[ExtractionRow],
    heads: &DependencyHeads,
    mode: MatchingMode,
) -> Result<(PrCurve, EvalSummary), EvalError> {
    let curve = pr_curve(predictions, gold, heads, mode)?;
    let assignments = assign_predictions(predictions, gold, heads, mode)?;
    let (p0, r0) = score_from_assignments(predictions, &assignments, gold.len(), 0.0);
    let f1_at_zero = if p0 + r0 == 0.0 {
        0.0
    } else {
        2.0 * p0 * r0 / (p0 + r0)
    };
    let matched = assignments.matched_gold.iter().flatten().count();
    let summary = EvalSummary {
        max_f1: curve.max_f1,
        f1_at_zero,
        auc: curve.auc,
        num_predictions: predictions.len(),
        num_gold: gold.len(),
        matched_at_min_threshold: matched,
        head_fallbacks: curve.head_fallbacks,
        matching_mode: match mode {
            MatchingMode::Positional => "positional".to_string(),
            MatchingMode::Lenient => "lenient".to_string(),
        },
    };
    Ok((curve, summary))
}

/// Write the curve as `threshold,precision,recall` CSV.
pub fn write_pr_csv<W: Write>(mut out: W, curve: &PrCurve) -> std::io::Result<()> {
    writeln!(out, "threshold,precision,recall")?;
    for p in &curve.points {
        writeln!(out, "{},{},{}", p.threshold, p.precision, p.recall)?;
    }
    Ok(())
}
