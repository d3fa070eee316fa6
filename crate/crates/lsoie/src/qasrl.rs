//! Reader for QA-SRL 2.0 JSON-lines annotation files.
//!
//! One line holds one sentence together with all of its per-predicate
//! question-answer annotations. Field names follow the public QA-SRL Bank
//! 2.0 release (see `FORMATS.md`). Answer spans are half-open `[start, end)`
//! token-index intervals; token indices, not character offsets, are the
//! canonical span unit throughout the toolkit.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::files::open_text;

/// Half-open token span `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start < end, "span start must precede end");
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn contains(&self, index: usize) -> bool {
        self.start <= index && index < self.end
    }

    /// Surface text of the span, joining tokens with single spaces.
    pub fn text(&self, tokens: &[String]) -> String {
        tokens[self.start..self.end].join(" ")
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.start, self.end)
    }
}

/// Corpus partition of the release.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum Partition {
    Train,
    Dev,
    Test,
}

impl Partition {
    pub fn as_str(&self) -> &'static str {
        match self {
            Partition::Train => "train",
            Partition::Dev => "dev",
            Partition::Test => "test",
        }
    }

    /// Infer the partition from a file name, e.g. `orig/train.jsonl.gz`.
    pub fn from_file_name(name: &str) -> Option<Partition> {
        let lower = name.to_ascii_lowercase();
        if lower.contains("train") {
            Some(Partition::Train)
        } else if lower.contains("dev") {
            Some(Partition::Dev)
        } else if lower.contains("test") {
            Some(Partition::Test)
        } else {
            None
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Text domain, recovered from the sentence-id prefix of the release
/// (`Wiki1k:wikipedia:...` / `Wiki1k:wikinews:...` vs. `TQA:...`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Domain {
    Wiki,
    Sci,
    Other,
}

impl Domain {
    pub fn as_str(&self) -> &'static str {
        match self {
            Domain::Wiki => "wiki",
            Domain::Sci => "sci",
            Domain::Other => "other",
        }
    }

    pub fn of_sentence_id(sentence_id: &str) -> Domain {
        let lower = sentence_id.to_ascii_lowercase();
        if lower.contains("wikipedia") || lower.contains("wikinews") {
            Domain::Wiki
        } else if lower.starts_with("tqa") {
            Domain::Sci
        } else {
            Domain::Other
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The 7-slot question template. The `verb` slot carries the abstract
/// inflection marker from the release (e.g. `stem`, `pastParticiple`),
/// never the verb lemma itself; unused slots hold `_`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QuestionSlots {
    #[serde(default = "empty_slot")]
    pub wh: String,
    #[serde(default = "empty_slot")]
    pub aux: String,
    #[serde(default = "empty_slot")]
    pub subj: String,
    pub verb: String,
    #[serde(default = "empty_slot")]
    pub obj: String,
    #[serde(default = "empty_slot")]
    pub prep: String,
    #[serde(default = "empty_slot")]
    pub obj2: String,
}

fn empty_slot() -> String {
    "_".to_string()
}

/// Tense and aspect markers attached to a question.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct TenseMarker {
    pub tense: String,
    pub is_perfect: bool,
    pub is_progressive: bool,
    pub is_negated: bool,
    pub is_passive: bool,
}

impl TenseMarker {
    /// Canonical single-string form, used when abstracting questions.
    pub fn canonical(&self) -> String {
        let mut s = self.tense.clone();
        if self.is_perfect {
            s.push_str("+perfect");
        }
        if self.is_progressive {
            s.push_str("+progressive");
        }
        if self.is_negated {
            s.push_str("+negated");
        }
        if self.is_passive {
            s.push_str("+passive");
        }
        s
    }
}

/// One annotator's answer to a question: either a set of spans, or a
/// judgment that the question is invalid (in which case `spans` is empty).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerJudgment {
    pub annotator_id: String,
    pub is_valid: bool,
    pub spans: Vec<Span>,
}

/// A question over one predicate, with its template slots, provenance
/// sources, and the answer judgments collected for it (three expected).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuestionLabel {
    pub question_text: String,
    pub slots: QuestionSlots,
    pub tense: TenseMarker,
    pub sources: Vec<String>,
    pub judgments: Vec<AnswerJudgment>,
}

impl QuestionLabel {
    /// True when the question carries no provenance marker at all.
    pub fn has_no_source(&self) -> bool {
        self.sources.is_empty()
    }

    /// True when any source id starts with the given crowd prefix.
    pub fn is_crowd_written(&self, crowd_prefix: &str) -> bool {
        self.sources.iter().any(|s| s.starts_with(crowd_prefix))
    }
}

/// All annotations for one verbal predicate in a sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerbEntry {
    pub predicate_index: usize,
    /// Inflected forms of the verb as shipped in the release (`stem`,
    /// `past`, ...). Kept verbatim so records round-trip.
    pub verb_forms: BTreeMap<String, String>,
    /// Questions sorted by question text.
    pub questions: Vec<QuestionLabel>,
}

/// A tokenized sentence with its per-predicate QA annotations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceRecord {
    pub sentence_id: String,
    pub tokens: Vec<String>,
    /// Verb entries sorted by predicate index.
    pub verb_entries: Vec<VerbEntry>,
}

impl SentenceRecord {
    pub fn domain(&self) -> Domain {
        Domain::of_sentence_id(&self.sentence_id)
    }
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("sentence {sentence_id}: span {span} out of bounds for {token_count} tokens")]
    SpanOutOfBounds {
        sentence_id: String,
        span: Span,
        token_count: usize,
    },
    #[error("duplicate sentence id {sentence_id}")]
    DuplicateSentenceId { sentence_id: String },
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

// ---------------------------------------------------------------------------
// Release schema (serde mirror)
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct RawSentence {
    #[serde(rename = "sentenceId")]
    sentence_id: String,
    #[serde(rename = "sentenceTokens")]
    sentence_tokens: Vec<String>,
    #[serde(rename = "verbEntries", default)]
    verb_entries: BTreeMap<String, RawVerbEntry>,
}

#[derive(Serialize, Deserialize)]
struct RawVerbEntry {
    #[serde(rename = "verbIndex")]
    verb_index: usize,
    #[serde(rename = "verbInflectedForms", default)]
    verb_inflected_forms: BTreeMap<String, String>,
    #[serde(rename = "questionLabels", default)]
    question_labels: BTreeMap<String, RawQuestionLabel>,
}

#[derive(Serialize, Deserialize)]
struct RawQuestionLabel {
    #[serde(rename = "questionString")]
    question_string: String,
    #[serde(rename = "questionSources", default)]
    question_sources: Vec<String>,
    #[serde(rename = "answerJudgments", default)]
    answer_judgments: Vec<RawJudgment>,
    #[serde(rename = "questionSlots")]
    question_slots: QuestionSlots,
    #[serde(default)]
    tense: String,
    #[serde(rename = "isPerfect", default)]
    is_perfect: bool,
    #[serde(rename = "isProgressive", default)]
    is_progressive: bool,
    #[serde(rename = "isNegated", default)]
    is_negated: bool,
    #[serde(rename = "isPassive", default)]
    is_passive: bool,
}

#[derive(Serialize, Deserialize)]
struct RawJudgment {
    #[serde(rename = "sourceId")]
    source_id: String,
    #[serde(rename = "isValid")]
    is_valid: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    spans: Vec<(usize, usize)>,
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

/// Parse one QA-SRL 2.0 JSON-lines file (gzip-compressed files are handled
/// by extension). Records are returned in file order; the `partition` tag is
/// carried through for reporting only.
pub fn parse_corpus(path: &Path, partition: Partition) -> Result<Corpus, ParseError> {
    let reader = open_text(path).map_err(|source| ParseError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let records = parse_lines(reader)?;
    Ok(Corpus { partition, records })
}

/// A parsed partition of the corpus.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub partition: Partition,
    pub records: Vec<SentenceRecord>,
}

/// Parse records from any line-oriented reader. Blank lines are skipped.
pub fn parse_lines<R: std::io::BufRead>(reader: R) -> Result<Vec<SentenceRecord>, ParseError> {
    let mut records = Vec::new();
    let mut seen_ids: HashSet<String> = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| ParseError::Io {
            path: format!("line {line_no}"),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_line(&line, line_no)?;
        if !seen_ids.insert(record.sentence_id.clone()) {
            return Err(ParseError::DuplicateSentenceId {
                sentence_id: record.sentence_id,
            });
        }
        records.push(record);
    }
    Ok(records)
}

/// Parse and validate a single sentence line.
pub fn parse_line(line: &str, line_no: usize) -> Result<SentenceRecord, ParseError> {
    let raw: RawSentence = serde_json::from_str(line).map_err(|e| ParseError::MalformedLine {
        line: line_no,
        message: e.to_string(),
    })?;
    validate(raw, line_no)
}

fn malformed(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::MalformedLine {
        line,
        message: message.into(),
    }
}

fn validate(raw: RawSentence, line_no: usize) -> Result<SentenceRecord, ParseError> {
    let token_count = raw.sentence_tokens.len();
    if token_count == 0 {
        return Err(malformed(line_no, "sentence has no tokens"));
    }

    let mut entries = Vec::with_capacity(raw.verb_entries.len());
    for (key, raw_entry) in raw.verb_entries {
        if key.parse::<usize>() != Ok(raw_entry.verb_index) {
            return Err(malformed(
                line_no,
                format!(
                    "verb entry key {key:?} does not match verbIndex {}",
                    raw_entry.verb_index
                ),
            ));
        }
        if raw_entry.verb_index >= token_count {
            return Err(malformed(
                line_no,
                format!(
                    "verbIndex {} out of bounds for {token_count} tokens",
                    raw_entry.verb_index
                ),
            ));
        }

        let mut questions = Vec::with_capacity(raw_entry.question_labels.len());
        for (question_key, raw_q) in raw_entry.question_labels {
            if question_key != raw_q.question_string {
                return Err(malformed(
                    line_no,
                    format!(
                        "question key {question_key:?} does not match questionString {:?}",
                        raw_q.question_string
                    ),
                ));
            }
            if raw_q.question_slots.verb.is_empty() || raw_q.question_slots.verb == "_" {
                return Err(malformed(
                    line_no,
                    format!("question {question_key:?} has an empty verb slot"),
                ));
            }

            let mut annotators: HashSet<&str> = HashSet::new();
            let mut judgments = Vec::with_capacity(raw_q.answer_judgments.len());
            for raw_j in &raw_q.answer_judgments {
                if !annotators.insert(raw_j.source_id.as_str()) {
                    return Err(malformed(
                        line_no,
                        format!(
                            "question {question_key:?} has multiple judgments from {:?}",
                            raw_j.source_id
                        ),
                    ));
                }
                if !raw_j.is_valid && !raw_j.spans.is_empty() {
                    return Err(malformed(
                        line_no,
                        format!(
                            "invalid judgment from {:?} carries answer spans",
                            raw_j.source_id
                        ),
                    ));
                }
                let mut spans = Vec::with_capacity(raw_j.spans.len());
                for &(start, end) in &raw_j.spans {
                    if start >= end {
                        return Err(malformed(
                            line_no,
                            format!("empty answer span [{start}, {end})"),
                        ));
                    }
                    if end > token_count {
                        return Err(ParseError::SpanOutOfBounds {
                            sentence_id: raw.sentence_id,
                            span: Span { start, end },
                            token_count,
                        });
                    }
                    spans.push(Span { start, end });
                }
                judgments.push(AnswerJudgment {
                    annotator_id: raw_j.source_id.clone(),
                    is_valid: raw_j.is_valid,
                    spans,
                });
            }

            questions.push(QuestionLabel {
                question_text: raw_q.question_string,
                slots: raw_q.question_slots,
                tense: TenseMarker {
                    tense: raw_q.tense,
                    is_perfect: raw_q.is_perfect,
                    is_progressive: raw_q.is_progressive,
                    is_negated: raw_q.is_negated,
                    is_passive: raw_q.is_passive,
                },
                sources: raw_q.question_sources,
                judgments,
            });
        }

        entries.push(VerbEntry {
            predicate_index: raw_entry.verb_index,
            verb_forms: raw_entry.verb_inflected_forms,
            questions,
        });
    }
    entries.sort_by_key(|e| e.predicate_index);

    Ok(SentenceRecord {
        sentence_id: raw.sentence_id,
        tokens: raw.sentence_tokens,
        verb_entries: entries,
    })
}

/// Serialize a record back to the release JSON schema. `parse_line` on the
/// result yields an equal record.
pub fn to_json_line(record: &SentenceRecord) -> String {
    let raw = RawSentence {
        sentence_id: record.sentence_id.clone(),
        sentence_tokens: record.tokens.clone(),
        verb_entries: record
            .verb_entries
            .iter()
            .map(|entry| {
                (
                    entry.predicate_index.to_string(),
                    RawVerbEntry {
                        verb_index: entry.predicate_index,
                        verb_inflected_forms: entry.verb_forms.clone(),
                        question_labels: entry
                            .questions
                            .iter()
                            .map(|q| {
                                (
                                    q.question_text.clone(),
                                    RawQuestionLabel {
                                        question_string: q.question_text.clone(),
                                        question_sources: q.sources.clone(),
                                        answer_judgments: q
                                            .judgments
                                            .iter()
                                            .map(|j| RawJudgment {
                                                source_id: j.annotator_id.clone(),
                                                is_valid: j.is_valid,
                                                spans: j
                                                    .spans
                                                    .iter()
                                                    .map(|s| (s.start, s.end))
                                                    .collect(),
                                            })
                                            .collect(),
                                        question_slots: q.slots.clone(),
                                        tense: q.tense.tense.clone(),
                                        is_perfect: q.tense.is_perfect,
                                        is_progressive: q.tense.is_progressive,
                                        is_negated: q.tense.is_negated,
                                        is_passive: q.tense.is_passive,
                                    },
                                )
                            })
                            .collect(),
                    },
                )
            })
            .collect(),
    };
    serde_json::to_string(&raw).expect("record serialization cannot fail")
}

// ---------------------------------------------------------------------------
// Crowdsourced filtering
// ---------------------------------------------------------------------------

/// Result of [`filter_crowdsourced`], with counters for the report.
#[derive(Debug, Clone, Default)]
pub struct FilterOutcome {
    pub records: Vec<SentenceRecord>,
    /// Questions with no provenance marker, kept and treated as crowd-written.
    pub defaulted_crowd: usize,
    pub questions_dropped: usize,
    pub records_dropped: usize,
}

/// Keep only directly crowd-written questions: those with at least one
/// source id starting with `crowd_prefix`. Questions with no sources at all
/// are treated as crowd-written (counted, and logged as a warning) so that
/// non-standard inputs are not silently emptied. Entries and records that
/// end up without questions are dropped.
pub fn filter_crowdsourced(records: Vec<SentenceRecord>, crowd_prefix: &str) -> FilterOutcome {
    let mut outcome = FilterOutcome::default();
    for mut record in records {
        for entry in &mut record.verb_entries {
            entry.questions.retain(|q| {
                if q.has_no_source() {
                    outcome.defaulted_crowd += 1;
                    true
                } else if q.is_crowd_written(crowd_prefix) {
                    true
                } else {
                    outcome.questions_dropped += 1;
                    false
                }
            });
        }
        record.verb_entries.retain(|e| !e.questions.is_empty());
        if record.verb_entries.is_empty() {
            outcome.records_dropped += 1;
        } else {
            outcome.records.push(record);
        }
    }
    if outcome.defaulted_crowd > 0 {
        log::warn!(
            "{} questions had no provenance marker; treated as crowd-written",
            outcome.defaulted_crowd
        );
    }
    outcome
}
