//! On-disk formats shared between pipeline stages. See `FORMATS.md` for the
//! full schemas.
//!
//! Extraction files come in two equivalent flavors:
//!
//! * TSV, one extraction per line:
//!   `sentence_id \t space-joined tokens \t predicate_index \t A0:2-3 A1:4-5 [\t confidence]`
//! * JSON lines carrying the same fields.
//!
//! Argument spans are half-open `[start, end)` and tagged with their slot
//! (`A0`, `A1`, ...). Token strings must not contain spaces or tabs, which
//! holds for tokenized QA-SRL input.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::convert::{Argument, Extraction};
use crate::qasrl::Span;

/// Open a text file for buffered reading, decompressing `.gz` by extension.
pub fn open_text(path: &Path) -> io::Result<Box<dyn BufRead>> {
    let file = File::open(path)?;
    if path.extension().is_some_and(|ext| ext == "gz") {
        Ok(Box::new(BufReader::new(MultiGzDecoder::new(file))))
    } else {
        Ok(Box::new(BufReader::new(file)))
    }
}

/// One extraction together with the tokens of its source sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionRow {
    pub tokens: Vec<String>,
    pub extraction: Extraction,
}

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{path}:{line}: {message}")]
    Malformed {
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

fn malformed(path: &Path, line: usize, message: impl Into<String>) -> FileError {
    FileError::Malformed {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

// ---------------------------------------------------------------------------
// TSV flavor
// ---------------------------------------------------------------------------

/// Format one extraction as a TSV line (no trailing newline).
pub fn extraction_to_tsv(row: &ExtractionRow) -> String {
    let ex = &row.extraction;
    let args = ex
        .arguments
        .iter()
        .map(|a| format!("A{}:{}-{}", a.slot, a.span.start, a.span.end))
        .collect::<Vec<_>>()
        .join(" ");
    let mut line = format!(
        "{}\t{}\t{}\t{}",
        ex.sentence_id,
        row.tokens.join(" "),
        ex.predicate_index,
        args
    );
    if let Some(conf) = ex.confidence {
        line.push('\t');
        line.push_str(&format!("{conf}"));
    }
    line
}

pub fn write_extractions_tsv<'a, W: Write>(
    mut out: W,
    rows: impl IntoIterator<Item = &'a ExtractionRow>,
) -> io::Result<()> {
    for row in rows {
        writeln!(out, "{}", extraction_to_tsv(row))?;
    }
    Ok(())
}

fn parse_slot_tagged_span(field: &str) -> Option<Argument> {
    let rest = field.strip_prefix('A')?;
    let (slot, span) = rest.split_once(':')?;
    let slot: u8 = slot.parse().ok()?;
    let (start, end) = span.split_once('-')?;
    let start: usize = start.parse().ok()?;
    let end: usize = end.parse().ok()?;
    if start >= end {
        return None;
    }
    Some(Argument {
        slot,
        span: Span { start, end },
    })
}

pub fn read_extractions_tsv(path: &Path) -> Result<Vec<ExtractionRow>, FileError> {
    let reader = open_text(path).map_err(|source| FileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| FileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 && fields.len() != 5 {
            return Err(malformed(
                path,
                line_no,
                format!("expected 4 or 5 tab-separated fields, found {}", fields.len()),
            ));
        }
        let tokens: Vec<String> = fields[1].split(' ').map(str::to_string).collect();
        let predicate_index: usize = fields[2]
            .parse()
            .map_err(|_| malformed(path, line_no, "predicate index is not a number"))?;
        if predicate_index >= tokens.len() {
            return Err(malformed(path, line_no, "predicate index out of bounds"));
        }
        let mut arguments = Vec::new();
        if !fields[3].is_empty() {
            for field in fields[3].split(' ') {
                let arg = parse_slot_tagged_span(field).ok_or_else(|| {
                    malformed(path, line_no, format!("bad argument field {field:?}"))
                })?;
                if arg.span.end > tokens.len() {
                    return Err(malformed(path, line_no, "argument span out of bounds"));
                }
                arguments.push(arg);
            }
        }
        let confidence = match fields.get(4) {
            Some(s) => {
                let c: f64 = s
                    .parse()
                    .map_err(|_| malformed(path, line_no, "confidence is not a number"))?;
                if c.is_nan() {
                    return Err(malformed(path, line_no, "confidence is NaN"));
                }
                Some(c)
            }
            None => None,
        };
        let predicate_text = tokens[predicate_index].clone();
        rows.push(ExtractionRow {
            tokens,
            extraction: Extraction {
                sentence_id: fields[0].to_string(),
                predicate_index,
                predicate_text,
                arguments,
                confidence,
            },
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// JSON-lines flavor
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct JsonRow {
    sentence_id: String,
    tokens: Vec<String>,
    predicate_index: usize,
    predicate: String,
    arguments: Vec<JsonArg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    confidence: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct JsonArg {
    slot: u8,
    start: usize,
    end: usize,
}

pub fn extraction_to_json(row: &ExtractionRow) -> String {
    let ex = &row.extraction;
    let json = JsonRow {
        sentence_id: ex.sentence_id.clone(),
        tokens: row.tokens.clone(),
        predicate_index: ex.predicate_index,
        predicate: ex.predicate_text.clone(),
        arguments: ex
            .arguments
            .iter()
            .map(|a| JsonArg {
                slot: a.slot,
                start: a.span.start,
                end: a.span.end,
            })
            .collect(),
        confidence: ex.confidence,
    };
    serde_json::to_string(&json).expect("extraction serialization cannot fail")
}

pub fn write_extractions_jsonl<'a, W: Write>(
    mut out: W,
    rows: impl IntoIterator<Item = &'a ExtractionRow>,
) -> io::Result<()> {
    for row in rows {
        writeln!(out, "{}", extraction_to_json(row))?;
    }
    Ok(())
}

pub fn read_extractions_jsonl(path: &Path) -> Result<Vec<ExtractionRow>, FileError> {
    let reader = open_text(path).map_err(|source| FileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| FileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let json: JsonRow = serde_json::from_str(&line)
            .map_err(|e| malformed(path, line_no, e.to_string()))?;
        if json.predicate_index >= json.tokens.len() {
            return Err(malformed(path, line_no, "predicate index out of bounds"));
        }
        if json.confidence.is_some_and(f64::is_nan) {
            return Err(malformed(path, line_no, "confidence is NaN"));
        }
        let mut arguments = Vec::with_capacity(json.arguments.len());
        for a in &json.arguments {
            if a.start >= a.end || a.end > json.tokens.len() {
                return Err(malformed(path, line_no, "bad argument span"));
            }
            arguments.push(Argument {
                slot: a.slot,
                span: Span {
                    start: a.start,
                    end: a.end,
                },
            });
        }
        rows.push(ExtractionRow {
            tokens: json.tokens,
            extraction: Extraction {
                sentence_id: json.sentence_id,
                predicate_index: json.predicate_index,
                predicate_text: json.predicate,
                arguments,
                confidence: json.confidence,
            },
        });
    }
    Ok(rows)
}

/// Read an extraction file, dispatching on extension (`.jsonl`/`.json` vs TSV).
pub fn read_extractions_auto(path: &Path) -> Result<Vec<ExtractionRow>, FileError> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
    let base = name.strip_suffix(".gz").unwrap_or(name);
    if base.ends_with(".jsonl") || base.ends_with(".json") {
        read_extractions_jsonl(path)
    } else {
        read_extractions_tsv(path)
    }
}
