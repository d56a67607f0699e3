//! Corpus ingestion: documents, cleaning, splitting, test mixtures, the
//! synthetic generator and the vocabulary.

mod io;
mod split;
pub mod synth;
mod text;
mod vocab;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

pub use io::{read_documents, read_records, write_documents, write_records};
pub use split::{mix_counts, mix_test_set, split_corpus, CorpusSplit, MixSpec};
pub use synth::{generate_synthetic_corpus, GoldRecord, PlantedWord, SyntheticCorpus, SyntheticSpec};
pub use text::{clean_text, segment_sentences, split_raw_sentences, tokenize};
pub use vocab::{build_vocabulary, Vocabulary, BLANK, DEFAULT_VOCAB_CAP, OOV, PAD};

/// Label used for non-crime documents.
pub const GENERAL: &str = "general";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CrimeClass {
    pub id: String,
    pub display_name: String,
}

impl CrimeClass {
    pub fn new(id: impl Into<String>, display_name: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            display_name: display_name.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sentence {
    pub index: usize,
    pub tokens: Vec<String>,
}

/// On-disk form of a document: one JSON object per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub id: String,
    pub text: String,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub raw_text: String,
    pub clean_text: String,
    /// A crime class id or [`GENERAL`].
    pub label: String,
    pub date: Option<NaiveDate>,
    pub sentences: Vec<Sentence>,
}

impl Document {
    pub fn new(
        id: impl Into<String>,
        raw_text: impl Into<String>,
        label: impl Into<String>,
        date: Option<NaiveDate>,
    ) -> Self {
        let raw_text = raw_text.into();
        Self {
            id: id.into(),
            clean_text: clean_text(&raw_text),
            sentences: segment_sentences(&raw_text),
            raw_text,
            label: label.into(),
            date,
        }
    }

    pub fn from_record(record: DocumentRecord) -> Self {
        Self::new(record.id, record.text, record.label, record.date)
    }

    pub fn to_record(&self) -> DocumentRecord {
        DocumentRecord {
            id: self.id.clone(),
            text: self.raw_text.clone(),
            label: self.label.clone(),
            date: self.date,
        }
    }

    pub fn is_general(&self) -> bool {
        self.label == GENERAL
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.sentences
            .iter()
            .flat_map(|s| s.tokens.iter().map(String::as_str))
    }
}
