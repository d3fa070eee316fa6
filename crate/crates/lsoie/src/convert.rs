//! Conversion of QA-SRL annotations into ordered n-ary extraction tuples.
//!
//! For a predicate `p` with questions `q_0..q_n`, each question contributes a
//! set of consolidated answer spans `A_i`; every element of the Cartesian
//! product of the `A_i` becomes one extraction tuple `(a0, p, a1, ..., ak)`.
//! The slot each question's answer occupies is decided by corpus statistics:
//! for every abstract question form (template slots plus tense, with the
//! verb lemma stripped) we count how often its answer is the 0th, 1st, ...
//! answer of its predicate in sentence order, and fill tuple slots left to
//! right with the question most likely to occupy them.
//!
//! The conversion runs in two passes: pass 1 aggregates [`PositionStats`],
//! pass 2 generates extractions. Both are deterministic functions of their
//! input; the parallel variants produce byte-identical output.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use itertools::Itertools;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::qasrl::{AnswerJudgment, QuestionLabel, SentenceRecord, Span, VerbEntry};

/// Per-predicate cap on the Cartesian-product size; entries above it are
/// skipped and counted. Typical entries produce a handful of tuples, so the
/// cap only guards against pathological annotations.
pub const DEFAULT_PRODUCT_CAP: usize = 64;

/// A question template with the verb lemma removed: the seven slots are kept
/// verbatim (the verb slot already holds an abstract inflection marker) and
/// the tense marker is retained. Questions over different verbs but with
/// identical structure and tense map to the same abstract form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AbstractQuestion {
    pub wh: String,
    pub aux: String,
    pub subj: String,
    pub verb_form: String,
    pub obj: String,
    pub prep: String,
    pub obj2: String,
    pub tense: String,
}

impl AbstractQuestion {
    pub fn of(question: &QuestionLabel) -> Self {
        AbstractQuestion {
            wh: question.slots.wh.clone(),
            aux: question.slots.aux.clone(),
            subj: question.slots.subj.clone(),
            verb_form: question.slots.verb.clone(),
            obj: question.slots.obj.clone(),
            prep: question.slots.prep.clone(),
            obj2: question.slots.obj2.clone(),
            tense: question.tense.canonical(),
        }
    }
}

impl fmt::Display for AbstractQuestion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {} {} {} {} [{}]",
            self.wh, self.aux, self.subj, self.verb_form, self.obj, self.prep, self.obj2, self.tense
        )
    }
}

/// Corpus-level table of relative answer positions: for each abstract
/// question form, how often its answer was the x-th answer of its predicate
/// in sentence order. Normalizing a form's counts gives the probability
/// `q(form, x)` used for slot assignment.
#[derive(Debug, Clone, Default)]
pub struct PositionStats {
    counts: HashMap<AbstractQuestion, Vec<u64>>,
}

impl PositionStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, question: AbstractQuestion, position: usize) {
        let counts = self.counts.entry(question).or_default();
        if counts.len() <= position {
            counts.resize(position + 1, 0);
        }
        counts[position] += 1;
    }

    /// Merge counts from another table (associative and commutative).
    pub fn merge(&mut self, other: PositionStats) {
        for (question, counts) in other.counts {
            let entry = self.counts.entry(question).or_default();
            if entry.len() < counts.len() {
                entry.resize(counts.len(), 0);
            }
            for (slot, c) in counts.into_iter().enumerate() {
                entry[slot] += c;
            }
        }
    }

    pub fn observed(&self, question: &AbstractQuestion) -> bool {
        self.counts.contains_key(question)
    }

    /// `q(form, x)`: probability that this form's answer sits at position x.
    /// `None` when the form was never observed.
    pub fn probability(&self, question: &AbstractQuestion, position: usize) -> Option<f64> {
        let counts = self.counts.get(question)?;
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return None;
        }
        let count = counts.get(position).copied().unwrap_or(0);
        Some(count as f64 / total as f64)
    }

    pub fn forms(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Normalized table keyed by the display form, for the stats export.
    pub fn to_normalized(&self) -> BTreeMap<String, Vec<f64>> {
        self.counts
            .iter()
            .map(|(q, counts)| {
                let total: u64 = counts.iter().sum();
                let probs = counts
                    .iter()
                    .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
                    .collect();
                (q.to_string(), probs)
            })
            .collect()
    }
}

/// One argument of an extraction: a token span and the tuple slot it fills.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Argument {
    pub slot: u8,
    pub span: Span,
}

/// One ordered extraction tuple `(a0, p, a1, ..., ak)`, anchored to token
/// spans of its source sentence. Arguments are sorted by slot, pairwise
/// non-overlapping, and never contain the predicate token.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub sentence_id: String,
    pub predicate_index: usize,
    pub predicate_text: String,
    pub arguments: Vec<Argument>,
    /// Log-probability-scale confidence, present on model predictions.
    pub confidence: Option<f64>,
}

impl Extraction {
    /// Argument surface texts in slot order.
    pub fn argument_texts(&self, tokens: &[String]) -> Vec<String> {
        self.arguments.iter().map(|a| a.span.text(tokens)).collect()
    }

    /// Render as `(a0, p, a1, ..., ak)`.
    pub fn tuple_text(&self, tokens: &[String]) -> String {
        let mut parts: Vec<String> = Vec::with_capacity(self.arguments.len() + 1);
        for (i, arg) in self.arguments.iter().enumerate() {
            parts.push(arg.span.text(tokens));
            if i == 0 {
                parts.push(self.predicate_text.clone());
            }
        }
        if self.arguments.is_empty() {
            parts.push(self.predicate_text.clone());
        }
        format!("({})", parts.join(", "))
    }

    /// Check the structural invariants: slots strictly increasing, spans
    /// pairwise non-overlapping, predicate outside every span.
    pub fn check(&self) -> Result<(), ConvertError> {
        for pair in self.arguments.windows(2) {
            if pair[0].slot >= pair[1].slot {
                return Err(ConvertError::InvalidExtraction {
                    sentence_id: self.sentence_id.clone(),
                    message: "argument slots not strictly increasing".into(),
                });
            }
        }
        for (i, a) in self.arguments.iter().enumerate() {
            if a.span.contains(self.predicate_index) {
                return Err(ConvertError::InvalidExtraction {
                    sentence_id: self.sentence_id.clone(),
                    message: format!("argument A{} contains the predicate", a.slot),
                });
            }
            for b in &self.arguments[i + 1..] {
                if a.span.overlaps(&b.span) {
                    return Err(ConvertError::InvalidExtraction {
                        sentence_id: self.sentence_id.clone(),
                        message: format!("arguments A{} and A{} overlap", a.slot, b.slot),
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ConvertError {
    #[error("valid question has an empty answer pool")]
    EmptyAnswerPool,
    #[error("Cartesian product of size {size} exceeds cap {cap}")]
    ProductOverflow { size: usize, cap: usize },
    #[error("invalid extraction in {sentence_id}: {message}")]
    InvalidExtraction {
        sentence_id: String,
        message: String,
    },
}

/// Counters accumulated while converting; serialized into the conversion
/// report so drops and fallbacks are auditable.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ConversionReport {
    pub records_in: usize,
    pub entries_in: usize,
    pub questions_in: usize,
    pub questions_dropped_too_few_judgments: usize,
    pub questions_dropped_not_unanimous: usize,
    pub questions_empty_answer_pool: usize,
    pub entries_product_overflow: usize,
    pub entries_duplicate_span_sets: usize,
    pub ordering_unseen_abstract_question: usize,
    pub arguments_dropped_contain_predicate: usize,
    pub arguments_dropped_cross_question_overlap: usize,
    pub tuples_dropped_no_arguments: usize,
    pub extractions_out: usize,
}

impl ConversionReport {
    pub fn merge(&mut self, other: &ConversionReport) {
        self.records_in += other.records_in;
        self.entries_in += other.entries_in;
        self.questions_in += other.questions_in;
        self.questions_dropped_too_few_judgments += other.questions_dropped_too_few_judgments;
        self.questions_dropped_not_unanimous += other.questions_dropped_not_unanimous;
        self.questions_empty_answer_pool += other.questions_empty_answer_pool;
        self.entries_product_overflow += other.entries_product_overflow;
        self.entries_duplicate_span_sets += other.entries_duplicate_span_sets;
        self.ordering_unseen_abstract_question += other.ordering_unseen_abstract_question;
        self.arguments_dropped_contain_predicate += other.arguments_dropped_contain_predicate;
        self.arguments_dropped_cross_question_overlap +=
            other.arguments_dropped_cross_question_overlap;
        self.tuples_dropped_no_arguments += other.tuples_dropped_no_arguments;
        self.extractions_out += other.extractions_out;
    }
}

// ---------------------------------------------------------------------------
// Filtering and consolidation
// ---------------------------------------------------------------------------

/// Keep only questions judged valid by all annotators, requiring the full
/// three judgments: questions with fewer are treated as not unanimously
/// valid and dropped.
pub fn filter_questions(entry: &VerbEntry) -> Vec<&QuestionLabel> {
    entry
        .questions
        .iter()
        .filter(|q| q.judgments.len() >= 3 && q.judgments.iter().all(|j| j.is_valid))
        .collect()
}

/// Consolidate all annotators' answer spans for one question: iteratively
/// draw the longest remaining span that does not overlap a previously drawn
/// one, until none remain. Equal-length candidates are drawn earliest start
/// first. The result is sorted by start index.
pub fn consolidate_answers(judgments: &[AnswerJudgment]) -> Result<Vec<Span>, ConvertError> {
    // Candidate pool is the set union over annotators.
    let mut pool: Vec<Span> = judgments
        .iter()
        .flat_map(|j| j.spans.iter().copied())
        .collect();
    pool.sort();
    pool.dedup();
    if pool.is_empty() {
        return Err(ConvertError::EmptyAnswerPool);
    }
    pool.sort_by(|a, b| b.len().cmp(&a.len()).then(a.start.cmp(&b.start)));

    let mut selected: Vec<Span> = Vec::new();
    for candidate in pool {
        if !selected.iter().any(|s| s.overlaps(&candidate)) {
            selected.push(candidate);
        }
    }
    selected.sort();
    Ok(selected)
}

/// A question with its consolidated answer spans, ready for ordering.
#[derive(Debug, Clone)]
pub struct ConsolidatedQuestion<'a> {
    pub label: &'a QuestionLabel,
    pub form: AbstractQuestion,
    pub spans: Vec<Span>,
}

impl<'a> ConsolidatedQuestion<'a> {
    /// Earliest consolidated span; spans are sorted, so this is `spans[0]`.
    fn first_span(&self) -> Span {
        self.spans[0]
    }
}

/// Filter and consolidate one entry's questions. Questions whose answer
/// pool is empty are dropped and counted.
fn consolidated_questions<'a>(
    entry: &'a VerbEntry,
    report: &mut ConversionReport,
) -> Vec<ConsolidatedQuestion<'a>> {
    let mut out = Vec::new();
    for question in &entry.questions {
        report.questions_in += 1;
        if question.judgments.len() < 3 {
            report.questions_dropped_too_few_judgments += 1;
            continue;
        }
        if !question.judgments.iter().all(|j| j.is_valid) {
            report.questions_dropped_not_unanimous += 1;
            continue;
        }
        match consolidate_answers(&question.judgments) {
            Ok(spans) => out.push(ConsolidatedQuestion {
                label: question,
                form: AbstractQuestion::of(question),
                spans,
            }),
            Err(ConvertError::EmptyAnswerPool) => report.questions_empty_answer_pool += 1,
            Err(_) => unreachable!("consolidate_answers only fails with EmptyAnswerPool"),
        }
    }
    out
}

/// Rank an entry's questions by the start of their first consolidated span
/// ("natural order of the sentence"). Ties fall back to span end, then
/// question text, to stay deterministic.
fn natural_ranks<'a, 'b>(
    questions: &'b [ConsolidatedQuestion<'a>],
) -> Vec<&'b ConsolidatedQuestion<'a>> {
    let mut ranked: Vec<&ConsolidatedQuestion> = questions.iter().collect();
    ranked.sort_by(|a, b| {
        a.first_span()
            .cmp(&b.first_span())
            .then_with(|| a.label.question_text.cmp(&b.label.question_text))
    });
    ranked
}

// ---------------------------------------------------------------------------
// Pass 1: position statistics
// ---------------------------------------------------------------------------

/// Aggregate the q-position table over a corpus: per predicate, unanimous
/// questions are ranked by their first consolidated span in sentence order,
/// and each question's abstract form counts one observation at its rank.
pub fn collect_position_stats(records: &[SentenceRecord]) -> PositionStats {
    let mut stats = PositionStats::new();
    for record in records {
        collect_record(record, &mut stats);
    }
    stats
}

/// Parallel variant of [`collect_position_stats`]; counts merge by addition,
/// so the result is identical to the sequential pass.
pub fn collect_position_stats_par(records: &[SentenceRecord]) -> PositionStats {
    records
        .par_iter()
        .fold(PositionStats::new, |mut stats, record| {
            collect_record(record, &mut stats);
            stats
        })
        .reduce(PositionStats::new, |mut a, b| {
            a.merge(b);
            a
        })
}

fn collect_record(record: &SentenceRecord, stats: &mut PositionStats) {
    let mut scratch = ConversionReport::default();
    for entry in &record.verb_entries {
        let questions = consolidated_questions(entry, &mut scratch);
        for (rank, question) in natural_ranks(&questions).into_iter().enumerate() {
            stats.record(question.form.clone(), rank);
        }
    }
}

// ---------------------------------------------------------------------------
// Pass 2: ordering and generation
// ---------------------------------------------------------------------------

/// Assign each question to one tuple slot. Slots fill left to right: slot x
/// goes to the unassigned question with the highest probability of its
/// answer naturally occupying position x. Ties, and questions whose abstract
/// form was never observed (probability treated as 0 and counted), fall back
/// to earlier span start.
pub fn order_questions<'a>(
    questions: Vec<ConsolidatedQuestion<'a>>,
    stats: &PositionStats,
) -> (Vec<ConsolidatedQuestion<'a>>, usize) {
    let unseen = questions
        .iter()
        .filter(|q| !stats.observed(&q.form))
        .count();

    let mut remaining = questions;
    let mut ordered = Vec::with_capacity(remaining.len());
    let mut slot = 0usize;
    while !remaining.is_empty() {
        let best = remaining
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| {
                let qa = stats.probability(&a.form, slot).unwrap_or(0.0);
                let qb = stats.probability(&b.form, slot).unwrap_or(0.0);
                qa.partial_cmp(&qb)
                    .expect("position probabilities are finite")
                    // On ties the earlier-starting span must win, so reverse
                    // the span comparison for max_by.
                    .then_with(|| b.first_span().cmp(&a.first_span()))
                    .then_with(|| b.label.question_text.cmp(&a.label.question_text))
            })
            .map(|(i, _)| i)
            .expect("remaining is non-empty");
        ordered.push(remaining.remove(best));
        slot += 1;
    }
    (ordered, unseen)
}

/// Generate all extractions for one verb entry: the Cartesian product of the
/// ordered questions' consolidated answer sets, capped at `product_cap`
/// tuples per entry. Arguments that contain the predicate token or overlap
/// an earlier-slot argument are dropped (and counted); remaining arguments
/// compact into contiguous slots.
pub fn generate_extractions(
    record: &SentenceRecord,
    entry: &VerbEntry,
    stats: &PositionStats,
    product_cap: usize,
    report: &mut ConversionReport,
) -> Vec<Extraction> {
    report.entries_in += 1;
    let questions = consolidated_questions(entry, report);
    if questions.is_empty() {
        return Vec::new();
    }

    let span_sets: Vec<&Vec<Span>> = questions.iter().map(|q| &q.spans).collect();
    if span_sets
        .iter()
        .enumerate()
        .any(|(i, a)| span_sets[i + 1..].iter().any(|b| a == b))
    {
        report.entries_duplicate_span_sets += 1;
    }

    let (ordered, unseen) = order_questions(questions, stats);
    report.ordering_unseen_abstract_question += unseen;

    let product_size: usize = ordered
        .iter()
        .map(|q| q.spans.len())
        .try_fold(1usize, |acc, n| acc.checked_mul(n))
        .unwrap_or(usize::MAX);
    if product_size > product_cap {
        report.entries_product_overflow += 1;
        log::warn!(
            "{} predicate {}: product of {} answer sets has {} tuples, over cap {}; entry skipped",
            record.sentence_id,
            entry.predicate_index,
            ordered.len(),
            product_size,
            product_cap
        );
        return Vec::new();
    }

    let mut extractions = Vec::with_capacity(product_size);
    for combo in ordered
        .iter()
        .map(|q| q.spans.iter().copied())
        .multi_cartesian_product()
    {
        let mut arguments: Vec<Argument> = Vec::with_capacity(combo.len());
        for span in combo {
            if span.contains(entry.predicate_index) {
                report.arguments_dropped_contain_predicate += 1;
                continue;
            }
            if arguments.iter().any(|a| a.span.overlaps(&span)) {
                report.arguments_dropped_cross_question_overlap += 1;
                continue;
            }
            arguments.push(Argument {
                slot: arguments.len() as u8,
                span,
            });
        }
        if arguments.is_empty() {
            report.tuples_dropped_no_arguments += 1;
            continue;
        }
        extractions.push(Extraction {
            sentence_id: record.sentence_id.clone(),
            predicate_index: entry.predicate_index,
            predicate_text: record.tokens[entry.predicate_index].clone(),
            arguments,
            confidence: None,
        });
    }
    report.extractions_out += extractions.len();
    extractions
}

/// Convert a whole corpus with precomputed position statistics. Output order
/// follows record order, entries by predicate index; the function is pure,
/// so repeated runs produce identical output.
pub fn convert_corpus(
    records: &[SentenceRecord],
    stats: &PositionStats,
    product_cap: usize,
) -> (Vec<Extraction>, ConversionReport) {
    let mut report = ConversionReport::default();
    let mut extractions = Vec::new();
    for record in records {
        report.records_in += 1;
        for entry in &record.verb_entries {
            extractions.extend(generate_extractions(
                record,
                entry,
                stats,
                product_cap,
                &mut report,
            ));
        }
    }
    (extractions, report)
}

/// Parallel variant of [`convert_corpus`]; per-record outputs are
/// concatenated in record order, so the result is identical.
pub fn convert_corpus_par(
    records: &[SentenceRecord],
    stats: &PositionStats,
    product_cap: usize,
) -> (Vec<Extraction>, ConversionReport) {
    let per_record: Vec<(Vec<Extraction>, ConversionReport)> = records
        .par_iter()
        .map(|record| {
            let mut report = ConversionReport {
                records_in: 1,
                ..ConversionReport::default()
            };
            let mut extractions = Vec::new();
            for entry in &record.verb_entries {
                extractions.extend(generate_extractions(
                    record,
                    entry,
                    stats,
                    product_cap,
                    &mut report,
                ));
            }
            (extractions, report)
        })
        .collect();

    let mut report = ConversionReport::default();
    let mut extractions = Vec::new();
    for (mut chunk, chunk_report) in per_record {
        extractions.append(&mut chunk);
        report.merge(&chunk_report);
    }
    (extractions, report)
}
