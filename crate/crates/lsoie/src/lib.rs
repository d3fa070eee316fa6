//! Toolkit for building an ordered, n-ary open information extraction corpus
//! out of QA-SRL 2.0 question-answer annotations, and for scoring predicted
//! extractions against it.
//!
//! The pipeline has four stages, mirrored by the CLI subcommands:
//!
//! 1. [`qasrl`] — parse and validate QA-SRL 2.0 JSON-lines files.
//! 2. [`convert`] — turn unanimous question-answer annotations into
//!    extraction tuples `(a0, p, a1, ..., ak)` with corpus-driven argument
//!    ordering.
//! 3. [`bio`] — encode extractions as token-level BIO tag sequences, decode
//!    emission matrices with constrained Viterbi, and score confidences.
//! 4. [`eval`] — match predictions against gold by predicate identity and
//!    syntactic-head containment, sweep confidence thresholds, and report
//!    precision/recall, max-F1, and AUC.
//!
//! [`stats`] computes corpus-level metrics (sentence/extraction counts,
//! vocabulary size, tag distribution) and [`files`] holds the on-disk
//! formats shared between stages. See `FORMATS.md` in the repository root
//! for the exact file schemas.

pub mod bio;
pub mod cli;
pub mod convert;
pub mod eval;
pub mod files;
pub mod qasrl;
pub mod stats;

pub use convert::{Argument, Extraction};
pub use qasrl::{SentenceRecord, Span};
