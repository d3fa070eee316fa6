//! Token-level BIO tagging of extractions.
//!
//! The tag vocabulary is `O`, `B-P`/`I-P` for the predicate, and
//! `B-A0`..`I-A5` for up to six argument slots (15 tags total). Encoding
//! maps an extraction onto a tag per token; decoding recovers span structure
//! either from explicit tags or from a per-token log-probability emission
//! matrix via Viterbi search constrained to BIO-valid transitions.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::convert::{Argument, Extraction};
use crate::files::open_text;
use crate::qasrl::{SentenceRecord, Span};

/// Highest argument slot representable in the tag vocabulary (`A0`..`A5`).
pub const MAX_ARG_SLOT: u8 = 5;
/// Number of tags: O, B-P, I-P, and B/I for six argument slots.
pub const VOCAB_SIZE: usize = 3 + 2 * (MAX_ARG_SLOT as usize + 1);

/// A BIO tag. The canonical index order (`O` = 0, `B-P` = 1, `I-P` = 2,
/// then `B-A0`, `I-A0`, ...) is also the tie-break order for decoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tag {
    Out,
    PredBegin,
    PredInside,
    ArgBegin(u8),
    ArgInside(u8),
}

impl Tag {
    pub fn index(self) -> usize {
        match self {
            Tag::Out => 0,
            Tag::PredBegin => 1,
            Tag::PredInside => 2,
            Tag::ArgBegin(slot) => 3 + 2 * slot as usize,
            Tag::ArgInside(slot) => 4 + 2 * slot as usize,
        }
    }

    pub fn from_index(index: usize) -> Tag {
        match index {
            0 => Tag::Out,
            1 => Tag::PredBegin,
            2 => Tag::PredInside,
            i if i < VOCAB_SIZE => {
                let slot = ((i - 3) / 2) as u8;
                if (i - 3) % 2 == 0 {
                    Tag::ArgBegin(slot)
                } else {
                    Tag::ArgInside(slot)
                }
            }
            _ => panic!("tag index {index} out of range"),
        }
    }

    pub fn as_str(self) -> String {
        match self {
            Tag::Out => "O".to_string(),
            Tag::PredBegin => "B-P".to_string(),
            Tag::PredInside => "I-P".to_string(),
            Tag::ArgBegin(slot) => format!("B-A{slot}"),
            Tag::ArgInside(slot) => format!("I-A{slot}"),
        }
    }

    pub fn parse(s: &str) -> Option<Tag> {
        match s {
            "O" => Some(Tag::Out),
            "B-P" => Some(Tag::PredBegin),
            "I-P" => Some(Tag::PredInside),
            _ => {
                let (prefix, class) = s.split_once('-')?;
                let slot: u8 = class.strip_prefix('A')?.parse().ok()?;
                if slot > MAX_ARG_SLOT {
                    return None;
                }
                match prefix {
                    "B" => Some(Tag::ArgBegin(slot)),
                    "I" => Some(Tag::ArgInside(slot)),
                    _ => None,
                }
            }
        }
    }

    /// Whether this is an inside tag, and if so of which begin tag.
    fn continues(self) -> Option<Tag> {
        match self {
            Tag::PredInside => Some(Tag::PredBegin),
            Tag::ArgInside(slot) => Some(Tag::ArgBegin(slot)),
            _ => None,
        }
    }
}

/// All tags in canonical index order.
pub fn canonical_tags() -> Vec<Tag> {
    (0..VOCAB_SIZE).map(Tag::from_index).collect()
}

/// A tagged sentence for one predicate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagSequence {
    pub sentence_id: String,
    pub predicate_index: usize,
    pub tags: Vec<Tag>,
}

#[derive(Debug, Error)]
pub enum BioError {
    #[error("extraction has arguments beyond slot A{MAX_ARG_SLOT}")]
    TooManyArguments,
    #[error("span {span} out of bounds for {token_count} tokens")]
    SpanOutOfBounds { span: Span, token_count: usize },
    #[error("invalid BIO transition at position {position}: {from} -> {to}")]
    InvalidBio {
        position: usize,
        from: String,
        to: String,
    },
    #[error("tag sequence has no predicate")]
    MissingPredicate,
    #[error("no valid tag path under the given constraints")]
    NoValidPath,
    #[error("emission matrix has no rows")]
    EmptyEmissions,
    #[error("emission row {row} is not a normalized distribution (log-sum-exp {lse:.2e})")]
    RowNotNormalized { row: usize, lse: f64 },
    #[error("emission vocabulary mismatch: {message}")]
    VocabularyMismatch { message: String },
    #[error("tag sequence length {tags} does not match emission length {emissions}")]
    LengthMismatch { tags: usize, emissions: usize },
    #[error("sequence has no tagged (non-O) tokens")]
    NoTaggedTokens,
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

/// Check BIO validity: an inside tag must directly follow the begin or
/// inside tag of the same class, and must not open the sequence.
pub fn validate_bio(tags: &[Tag]) -> Result<(), BioError> {
    let mut prev: Option<Tag> = None;
    for (position, &tag) in tags.iter().enumerate() {
        if let Some(begin) = tag.continues() {
            let ok = match prev {
                Some(p) => p == begin || p == tag,
                None => false,
            };
            if !ok {
                return Err(BioError::InvalidBio {
                    position,
                    from: prev.map_or("<start>".to_string(), |p| p.as_str()),
                    to: tag.as_str(),
                });
            }
        }
        prev = Some(tag);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Encoding
// ---------------------------------------------------------------------------

/// Tag a sentence for one extraction: the predicate token gets `B-P`, each
/// argument span `B-Ai`/`I-Ai` for its slot, everything else `O`. Decoding
/// the result recovers the extraction's spans exactly.
pub fn encode_bio(record: &SentenceRecord, extraction: &Extraction) -> Result<TagSequence, BioError> {
    let token_count = record.tokens.len();
    let mut tags = vec![Tag::Out; token_count];
    if extraction.predicate_index >= token_count {
        return Err(BioError::SpanOutOfBounds {
            span: Span {
                start: extraction.predicate_index,
                end: extraction.predicate_index + 1,
            },
            token_count,
        });
    }
    tags[extraction.predicate_index] = Tag::PredBegin;
    for arg in &extraction.arguments {
        if arg.slot > MAX_ARG_SLOT {
            return Err(BioError::TooManyArguments);
        }
        if arg.span.end > token_count {
            return Err(BioError::SpanOutOfBounds {
                span: arg.span,
                token_count,
            });
        }
        tags[arg.span.start] = Tag::ArgBegin(arg.slot);
        tags[arg.span.start + 1..arg.span.end].fill(Tag::ArgInside(arg.slot));
    }
    Ok(TagSequence {
        sentence_id: extraction.sentence_id.clone(),
        predicate_index: extraction.predicate_index,
        tags,
    })
}

/// Recover an extraction from a BIO-valid tag sequence: the `P` run gives
/// the predicate, each `B-Ai`/`I-Ai` run an argument span. If a class is
/// tagged in several runs, the first run wins; the result may have no
/// arguments at all (callers reject such extractions downstream).
pub fn tags_to_extraction(
    tags: &TagSequence,
    tokens: &[String],
) -> Result<Extraction, BioError> {
    validate_bio(&tags.tags)?;

    let mut predicate: Option<Span> = None;
    let mut arguments: Vec<Argument> = Vec::new();
    let mut i = 0;
    while i < tags.tags.len() {
        let tag = tags.tags[i];
        let run_start = i;
        match tag {
            Tag::Out => {
                i += 1;
                continue;
            }
            Tag::PredBegin => {
                i += 1;
                while i < tags.tags.len() && tags.tags[i] == Tag::PredInside {
                    i += 1;
                }
                if predicate.is_none() {
                    predicate = Some(Span {
                        start: run_start,
                        end: i,
                    });
                }
            }
            Tag::ArgBegin(slot) => {
                i += 1;
                while i < tags.tags.len() && tags.tags[i] == Tag::ArgInside(slot) {
                    i += 1;
                }
                if !arguments.iter().any(|a| a.slot == slot) {
                    arguments.push(Argument {
                        slot,
                        span: Span {
                            start: run_start,
                            end: i,
                        },
                    });
                }
            }
            // validate_bio guarantees inside tags never start a run.
            Tag::PredInside | Tag::ArgInside(_) => unreachable!("run starts with inside tag"),
        }
    }

    let predicate = predicate.ok_or(BioError::MissingPredicate)?;
    arguments.sort_by_key(|a| a.slot);
    Ok(Extraction {
        sentence_id: tags.sentence_id.clone(),
        predicate_index: predicate.start,
        predicate_text: tokens[predicate.start..predicate.end].join(" "),
        arguments,
        confidence: None,
    })
}

// ---------------------------------------------------------------------------
// Emissions and constraints
// ---------------------------------------------------------------------------

/// Per-token log-probability distributions over the tag vocabulary, columns
/// in canonical tag order. Every row must log-sum-exp to 0 within 1e-6.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionMatrix {
    rows: Vec<Vec<f64>>,
}

impl EmissionMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, BioError> {
        if rows.is_empty() {
            return Err(BioError::EmptyEmissions);
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != VOCAB_SIZE {
                return Err(BioError::VocabularyMismatch {
                    message: format!("row {i} has {} columns, expected {VOCAB_SIZE}", row.len()),
                });
            }
            let lse = log_sum_exp(row);
            if lse.abs() > 1e-6 {
                return Err(BioError::RowNotNormalized { row: i, lse });
            }
        }
        Ok(EmissionMatrix { rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn score(&self, position: usize, tag: Tag) -> f64 {
        self.rows[position][tag.index()]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Hard transition constraints (score 0 when allowed, -inf otherwise):
/// exactly the BIO-invalid moves are forbidden, i.e. an inside tag may only
/// follow the begin/inside tag of its own class and may not start or be
/// entered from another class. All tags may end a sequence.
#[derive(Debug, Clone)]
pub struct TransitionConstraints {
    allowed: Vec<Vec<bool>>,
    start: Vec<bool>,
    end: Vec<bool>,
}

impl TransitionConstraints {
    pub fn bio() -> Self {
        let tags = canonical_tags();
        let allowed = tags
            .iter()
            .map(|&from| {
                tags.iter()
                    .map(|&to| match to.continues() {
                        Some(begin) => from == begin || from == to,
                        None => true,
                    })
                    .collect()
            })
            .collect();
        let start = tags.iter().map(|t| t.continues().is_none()).collect();
        let end = vec![true; VOCAB_SIZE];
        TransitionConstraints { allowed, start, end }
    }

    pub fn is_allowed(&self, from: Tag, to: Tag) -> bool {
        self.allowed[from.index()][to.index()]
    }

    pub fn may_start(&self, tag: Tag) -> bool {
        self.start[tag.index()]
    }

    pub fn may_end(&self, tag: Tag) -> bool {
        self.end[tag.index()]
    }
}

impl Default for TransitionConstraints {
    fn default() -> Self {
        Self::bio()
    }
}

// ---------------------------------------------------------------------------
// Viterbi decoding
// ---------------------------------------------------------------------------

/// Find the highest-probability tag path under the constraints, returning
/// the path and its log-probability (the sum of the chosen emission scores;
/// allowed transitions score 0). Ties resolve to the lexicographically
/// smallest path in canonical tag-index order.
#[allow(clippy::needless_range_loop)]
pub fn decode_viterbi(
    emissions: &EmissionMatrix,
    constraints: &TransitionConstraints,
) -> Result<(Vec<Tag>, f64), BioError> {
    let len = emissions.len();
    if len == 0 {
        return Err(BioError::EmptyEmissions);
    }

    // suffix[t][j]: best total score of a valid path over positions t.. that
    // occupies state j at position t.
    let mut suffix = vec![vec![f64::NEG_INFINITY; VOCAB_SIZE]; len];
    for j in 0..VOCAB_SIZE {
        if constraints.may_end(Tag::from_index(j)) {
            suffix[len - 1][j] = emissions.rows[len - 1][j];
        }
    }
    for t in (0..len - 1).rev() {
        for j in 0..VOCAB_SIZE {
            let mut best = f64::NEG_INFINITY;
            for (k, &ok) in constraints.allowed[j].iter().enumerate() {
                if ok && suffix[t + 1][k] > best {
                    best = suffix[t + 1][k];
                }
            }
            suffix[t][j] = emissions.rows[t][j] + best;
        }
    }

    // Walk forward, at each step taking the smallest state index that still
    // achieves the optimum; earlier positions dominate the lexicographic
    // order, so this greedy choice is exact.
    let mut best_start = None;
    let mut best_score = f64::NEG_INFINITY;
    for j in 0..VOCAB_SIZE {
        if constraints.start[j] && suffix[0][j] > best_score {
            best_score = suffix[0][j];
            best_start = Some(j);
        }
    }
    // best_start stays None when every start state scores -inf, i.e. the
    // constraints (or zero-probability emissions) eliminate all paths.
    let Some(mut state) = best_start else {
        return Err(BioError::NoValidPath);
    };

    let mut path = Vec::with_capacity(len);
    path.push(Tag::from_index(state));
    for t in 1..len {
        let mut next = None;
        let mut next_score = f64::NEG_INFINITY;
        for (k, &ok) in constraints.allowed[state].iter().enumerate() {
            if ok && suffix[t][k] > next_score {
                next_score = suffix[t][k];
                next = Some(k);
            }
        }
        state = next.expect("a finite suffix score implies a continuation");
        path.push(Tag::from_index(state));
    }

    // Recompute the score as a forward sum over the chosen path so it is
    // independent of the DP accumulation order.
    let logprob = path
        .iter()
        .enumerate()
        .map(|(t, &tag)| emissions.score(t, tag))
        .sum();
    Ok((path, logprob))
}

// ---------------------------------------------------------------------------
// Confidence scores
// ---------------------------------------------------------------------------

/// Mean emission log-probability of the assigned tags over non-O positions;
/// O tokens are not part of the extraction and are excluded.
pub fn confidence_mean_logprob(
    tags: &TagSequence,
    emissions: &EmissionMatrix,
) -> Result<f64, BioError> {
    mean_logprob(tags, emissions, false)
}

/// Variant averaging over all positions, O included, for comparison studies.
pub fn confidence_mean_logprob_all_positions(
    tags: &TagSequence,
    emissions: &EmissionMatrix,
) -> Result<f64, BioError> {
    mean_logprob(tags, emissions, true)
}

fn mean_logprob(
    tags: &TagSequence,
    emissions: &EmissionMatrix,
    include_out: bool,
) -> Result<f64, BioError> {
    if tags.tags.len() != emissions.len() {
        return Err(BioError::LengthMismatch {
            tags: tags.tags.len(),
            emissions: emissions.len(),
        });
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for (t, &tag) in tags.tags.iter().enumerate() {
        if include_out || tag != Tag::Out {
            total += emissions.score(t, tag);
            count += 1;
        }
    }
    if count == 0 {
        return Err(BioError::NoTaggedTokens);
    }
    Ok(total / count as f64)
}

/// Whole-sequence confidence: the Viterbi path log-probability, passed
/// through unchanged.
pub fn confidence_sequence_logprob(path_logprob: f64) -> f64 {
    path_logprob
}

// ---------------------------------------------------------------------------
// Tag and emission files
// ---------------------------------------------------------------------------

/// Write tag sequences as CoNLL-style blocks: two header comment lines with
/// the sentence id and predicate index, then one `token<TAB>tag` line per
/// token, blocks separated by a blank line.
pub fn write_tag_file<'a, W: Write>(
    mut out: W,
    blocks: impl IntoIterator<Item = (&'a TagSequence, &'a [String])>,
) -> std::io::Result<()> {
    for (tags, tokens) in blocks {
        writeln!(out, "# sentence_id = {}", tags.sentence_id)?;
        writeln!(out, "# predicate_index = {}", tags.predicate_index)?;
        for (token, tag) in tokens.iter().zip(&tags.tags) {
            writeln!(out, "{token}\t{}", tag.as_str())?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Read a tag file written by [`write_tag_file`] (or produced externally in
/// the same shape). BIO validity is not checked here; `tags_to_extraction`
/// reports violations.
pub fn read_tag_file(path: &Path) -> Result<Vec<(TagSequence, Vec<String>)>, BioError> {
    let reader = open_text(path).map_err(|source| BioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut blocks = Vec::new();
    let mut sentence_id: Option<String> = None;
    let mut predicate_index: Option<usize> = None;
    let mut tokens: Vec<String> = Vec::new();
    let mut tags: Vec<Tag> = Vec::new();

    let malformed = |line: usize, message: String| BioError::MalformedFile {
        path: path.display().to_string(),
        line,
        message,
    };

    let mut flush = |sentence_id: &mut Option<String>,
                     predicate_index: &mut Option<usize>,
                     tokens: &mut Vec<String>,
                     tags: &mut Vec<Tag>,
                     line: usize|
     -> Result<(), BioError> {
        if tokens.is_empty() {
            return Ok(());
        }
        let sid = sentence_id
            .take()
            .ok_or_else(|| malformed(line, "block missing sentence_id header".into()))?;
        let pidx = predicate_index
            .take()
            .ok_or_else(|| malformed(line, "block missing predicate_index header".into()))?;
        blocks.push((
            TagSequence {
                sentence_id: sid,
                predicate_index: pidx,
                tags: std::mem::take(tags),
            },
            std::mem::take(tokens),
        ));
        Ok(())
    };

    let mut line_no = 0usize;
    for line in reader.lines() {
        line_no += 1;
        let line = line.map_err(|source| BioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let trimmed = line.trim_end();
        if trimmed.is_empty() {
            flush(&mut sentence_id, &mut predicate_index, &mut tokens, &mut tags, line_no)?;
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(v) = rest.strip_prefix("sentence_id =") {
                sentence_id = Some(v.trim().to_string());
            } else if let Some(v) = rest.strip_prefix("predicate_index =") {
                predicate_index = Some(v.trim().parse().map_err(|_| {
                    malformed(line_no, "predicate_index is not a number".into())
                })?);
            }
            continue;
        }
        let (token, tag) = trimmed
            .split_once('\t')
            .ok_or_else(|| malformed(line_no, "expected token<TAB>tag".into()))?;
        let tag = Tag::parse(tag.trim())
            .ok_or_else(|| malformed(line_no, format!("unknown tag {tag:?}")))?;
        tokens.push(token.to_string());
        tags.push(tag);
    }
    flush(&mut sentence_id, &mut predicate_index, &mut tokens, &mut tags, line_no)?;
    Ok(blocks)
}

/// One emission-file record: the matrix for a (sentence, predicate) pair.
#[derive(Debug, Clone)]
pub struct EmissionRecord {
    pub sentence_id: String,
    pub predicate_index: usize,
    pub tokens: Option<Vec<String>>,
    pub emissions: EmissionMatrix,
}

#[derive(Serialize, Deserialize)]
struct RawEmissionRecord {
    sentence_id: String,
    predicate_index: usize,
    tags: Vec<String>,
    log_probs: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tokens: Option<Vec<String>>,
}

/// Read a JSON-lines emission file. Each record carries its own tag list,
/// which must name exactly the toolkit vocabulary (any order); columns are
/// remapped to canonical order.
pub fn read_emission_file(path: &Path) -> Result<Vec<EmissionRecord>, BioError> {
    let reader = open_text(path).map_err(|source| BioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| BioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawEmissionRecord =
            serde_json::from_str(&line).map_err(|e| BioError::MalformedFile {
                path: path.display().to_string(),
                line: line_no,
                message: e.to_string(),
            })?;
        records.push(emission_record_from_raw(raw).map_err(|e| match e {
            BioError::VocabularyMismatch { message } => BioError::VocabularyMismatch {
                message: format!("{}:{line_no}: {message}", path.display()),
            },
            other => other,
        })?);
    }
    Ok(records)
}

fn emission_record_from_raw(raw: RawEmissionRecord) -> Result<EmissionRecord, BioError> {
    if raw.tags.len() != VOCAB_SIZE {
        return Err(BioError::VocabularyMismatch {
            message: format!("{} tags listed, expected {VOCAB_SIZE}", raw.tags.len()),
        });
    }
    let mut column_of = [usize::MAX; VOCAB_SIZE];
    for (col, name) in raw.tags.iter().enumerate() {
        let tag = Tag::parse(name).ok_or_else(|| BioError::VocabularyMismatch {
            message: format!("unknown tag name {name:?}"),
        })?;
        if column_of[tag.index()] != usize::MAX {
            return Err(BioError::VocabularyMismatch {
                message: format!("tag {name:?} listed twice"),
            });
        }
        column_of[tag.index()] = col;
    }
    let mut rows = Vec::with_capacity(raw.log_probs.len());
    for (i, raw_row) in raw.log_probs.iter().enumerate() {
        if raw_row.len() != VOCAB_SIZE {
            return Err(BioError::VocabularyMismatch {
                message: format!("row {i} has {} columns, expected {VOCAB_SIZE}", raw_row.len()),
            });
        }
        rows.push((0..VOCAB_SIZE).map(|j| raw_row[column_of[j]]).collect());
    }
    if let Some(tokens) = &raw.tokens {
        if tokens.len() != rows.len() {
            return Err(BioError::VocabularyMismatch {
                message: format!(
                    "{} tokens for {} emission rows",
                    tokens.len(),
                    rows.len()
                ),
            });
        }
    }
    Ok(EmissionRecord {
        sentence_id: raw.sentence_id,
        predicate_index: raw.predicate_index,
        tokens: raw.tokens,
        emissions: EmissionMatrix::new(rows)?,
    })
}

/// Serialize one emission record (canonical tag order) as a JSON line.
pub fn emission_record_to_json(record: &EmissionRecord) -> String {
    let raw = RawEmissionRecord {
        sentence_id: record.sentence_id.clone(),
        predicate_index: record.predicate_index,
        tags: canonical_tags().iter().map(|t| t.as_str()).collect(),
        log_probs: record.emissions.rows.clone(),
        tokens: record.tokens.clone(),
    };
    serde_json::to_string(&raw).expect("emission serialization cannot fail")
}
