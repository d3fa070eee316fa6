//! Corpus-level metrics over a converted extraction set: sentence and
//! extraction counts, vocabulary size, and the distribution of token-level
//! tag classes over the BIO encodings of all extractions.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::bio::{encode_bio, Tag};
use crate::convert::Extraction;
use crate::qasrl::SentenceRecord;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("extraction references unknown sentence {sentence_id}")]
    UnknownSentence { sentence_id: String },
}

/// Dataset metrics. Sentences and vocabulary are counted over the sentences
/// that contribute at least one extraction; the vocabulary is case-sensitive
/// over raw tokens, with a lowercased variant reported for comparison.
#[derive(Debug, Clone, Serialize)]
pub struct CorpusMetrics {
    pub sentence_count: usize,
    pub extraction_count: usize,
    pub extractions_per_sentence: f64,
    pub vocab_size: usize,
    pub vocab_size_lowercase: usize,
    /// Proportion of token mass per tag class (P, A0..A5, O), over the BIO
    /// encodings of all extractions; a token tagged in two extractions
    /// counts twice.
    pub tag_distribution: BTreeMap<String, f64>,
    /// Extractions whose arguments exceed the representable tag slots and
    /// were skipped in the tag distribution.
    pub tag_encode_skipped: usize,
}

fn tag_class(tag: Tag) -> String {
    match tag {
        Tag::Out => "O".to_string(),
        Tag::PredBegin | Tag::PredInside => "P".to_string(),
        Tag::ArgBegin(slot) | Tag::ArgInside(slot) => format!("A{slot}"),
    }
}

/// Compute metrics for extractions produced from the given records.
pub fn compute_metrics(
    records: &[SentenceRecord],
    extractions: &[Extraction],
) -> Result<CorpusMetrics, StatsError> {
    if records.is_empty() || extractions.is_empty() {
        return Err(StatsError::EmptyCorpus);
    }
    let by_id: HashMap<&str, &SentenceRecord> = records
        .iter()
        .map(|r| (r.sentence_id.as_str(), r))
        .collect();

    let mut sentences: HashSet<&str> = HashSet::new();
    let mut tag_mass: BTreeMap<String, u64> = BTreeMap::new();
    let mut tag_encode_skipped = 0usize;
    for extraction in extractions {
        let record = by_id
            .get(extraction.sentence_id.as_str())
            .ok_or_else(|| StatsError::UnknownSentence {
                sentence_id: extraction.sentence_id.clone(),
            })?;
        sentences.insert(record.sentence_id.as_str());
        match encode_bio(record, extraction) {
            Ok(seq) => {
                for &tag in &seq.tags {
                    *tag_mass.entry(tag_class(tag)).or_insert(0) += 1;
                }
            }
            Err(_) => tag_encode_skipped += 1,
        }
    }

    let mut vocab: HashSet<&str> = HashSet::new();
    let mut vocab_lower: HashSet<String> = HashSet::new();
    for &sid in &sentences {
        let record = by_id[sid];
        for token in &record.tokens {
            vocab.insert(token.as_str());
            vocab_lower.insert(token.to_lowercase());
        }
    }

    let total_mass: u64 = tag_mass.values().sum();
    let tag_distribution = tag_mass
        .into_iter()
        .map(|(class, mass)| (class, mass as f64 / total_mass as f64))
        .collect();

    Ok(CorpusMetrics {
        sentence_count: sentences.len(),
        extraction_count: extractions.len(),
        extractions_per_sentence: extractions.len() as f64 / sentences.len() as f64,
        vocab_size: vocab.len(),
        vocab_size_lowercase: vocab_lower.len(),
        tag_distribution,
        tag_encode_skipped,
    })
}

impl CorpusMetrics {
    /// Human-readable report.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{:<28}{:>12}\n", "sentences", self.sentence_count));
        out.push_str(&format!(
            "{:<28}{:>12}\n",
            "extractions", self.extraction_count
        ));
        out.push_str(&format!(
            "{:<28}{:>12.2}\n",
            "extractions / sentence", self.extractions_per_sentence
        ));
        out.push_str(&format!("{:<28}{:>12}\n", "vocabulary", self.vocab_size));
        out.push_str(&format!(
            "{:<28}{:>12}\n",
            "vocabulary (lowercased)", self.vocab_size_lowercase
        ));
        out.push_str("tag distribution:\n");
        for (class, share) in &self.tag_distribution {
            out.push_str(&format!("  {:<26}{:>11.2}%\n", class, share * 100.0));
        }
        if self.tag_encode_skipped > 0 {
            out.push_str(&format!(
                "  ({} extractions beyond the tag slots skipped)\n",
                self.tag_encode_skipped
            ));
        }
        out
    }

    /// Tag-distribution CSV (`class,proportion`) for plotting.
    pub fn write_tag_distribution_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "tag,proportion")?;
        for (class, share) in &self.tag_distribution {
            writeln!(out, "{class},{share}")?;
        }
        Ok(())
    }
}
