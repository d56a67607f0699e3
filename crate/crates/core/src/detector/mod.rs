//! Class profiles, sentence assignment and coded-word candidate extraction.

mod dictionary;

use std::collections::BTreeSet;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::autoencoder::{AutoEncoderModel, LatentVector};
use crate::corpus::{CrimeClass, Document, Sentence};
use crate::error::{Error, Result};

pub use dictionary::{C3Dictionary, DictionaryEntry, EntrySource};

/// `(a . b) / (|a| |b|)`.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!(
            "vectors of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Component-wise mean of equally sized vectors.
pub fn mean_vector(vectors: &[LatentVector]) -> Result<LatentVector> {
    let first = vectors.first().ok_or(Error::EmptyCorpus)?;
    let dim = first.dim();
    let mut sum = vec![0.0; dim];
    for v in vectors {
        if v.dim() != dim {
            return Err(Error::ShapeMismatch(format!(
                "vector of length {} among length {dim}",
                v.dim()
            )));
        }
        for (s, x) in sum.iter_mut().zip(v.as_slice()) {
            *s += x;
        }
    }
    let n = vectors.len() as f64;
    Ok(LatentVector(sum.into_iter().map(|s| s / n).collect()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassProfile {
    pub crime_class: CrimeClass,
    pub mean_vector: LatentVector,
    pub n: usize,
}

impl ClassProfile {
    pub fn from_vectors(crime_class: CrimeClass, vectors: &[LatentVector]) -> Result<Self> {
        Ok(Self {
            crime_class,
            mean_vector: mean_vector(vectors)?,
            n: vectors.len(),
        })
    }

    pub fn id(&self) -> &str {
        &self.crime_class.id
    }
}

/// Mean latent vector of the class's profile documents, which must all
/// carry the class label.
pub fn build_class_profile(
    model: &AutoEncoderModel,
    crime_class: CrimeClass,
    docs: &[Document],
) -> Result<ClassProfile> {
    if let Some(d) = docs.iter().find(|d| d.label != crime_class.id) {
        return Err(Error::InvalidArgument(format!(
            "profile document `{}` is labelled `{}`, not `{}`",
            d.id, d.label, crime_class.id
        )));
    }
    let docs: Vec<Document> = docs.iter().filter(|d| d.tokens().next().is_some()).cloned().collect();
    if docs.is_empty() {
        return Err(Error::InsufficientCorpus(format!(
            "no profile documents for class `{}`",
            crime_class.id
        )));
    }
    let vectors = model.encode_documents(&docs)?;
    ClassProfile::from_vectors(crime_class, &vectors)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    /// Minimum similarity for an assignment or a candidate.
    pub theta: f64,
    pub min_word_len: usize,
    pub stopwords: BTreeSet<String>,
}

const DEFAULT_STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "but", "by", "for", "from", "has", "have", "he",
    "i", "if", "in", "is", "it", "its", "me", "my", "no", "not", "of", "on", "or", "our", "she",
    "so", "that", "the", "their", "them", "they", "this", "to", "up", "us", "was", "we", "were",
    "what", "when", "who", "will", "with", "you", "your",
];

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            theta: 0.7,
            min_word_len: 2,
            stopwords: DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(-1.0..=1.0).contains(&self.theta) {
            return Err(Error::InvalidConfig(format!(
                "theta must lie in [-1, 1], got {}",
                self.theta
            )));
        }
        Ok(())
    }

    pub fn with_theta(theta: f64) -> Self {
        Self {
            theta,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub crime_class: String,
    pub similarity: f64,
}

/// Argmax over profiles with a threshold. Returns the assigned class (if
/// the best score reaches `theta`) and one score per profile in class id
/// order; equal scores resolve to the smaller class id.
pub fn assign(
    vector: &LatentVector,
    profiles: &[ClassProfile],
    theta: f64,
) -> Result<(Option<String>, Vec<ClassScore>)> {
    let scores = score_vector(vector, profiles)?;
    Ok((assign_scores(&scores, theta), scores))
}

/// Similarities against every profile, ordered by class id.
pub fn score_vector(vector: &LatentVector, profiles: &[ClassProfile]) -> Result<Vec<ClassScore>> {
    if profiles.is_empty() {
        return Err(Error::InvalidArgument("at least one profile required".into()));
    }
    let mut ordered: Vec<&ClassProfile> = profiles.iter().collect();
    ordered.sort_by(|a, b| a.id().cmp(b.id()));
    ordered
        .into_iter()
        .map(|p| {
            Ok(ClassScore {
                crime_class: p.id().to_string(),
                similarity: cosine_similarity(vector.as_slice(), p.mean_vector.as_slice())?,
            })
        })
        .collect()
}

/// Thresholded argmax over scores already ordered by class id.
pub fn assign_scores(scores: &[ClassScore], theta: f64) -> Option<String> {
    let mut best: Option<&ClassScore> = None;
    for s in scores {
        if best.is_none_or(|b| s.similarity > b.similarity) {
            best = Some(s);
        }
    }
    best.filter(|b| b.similarity >= theta)
        .map(|b| b.crime_class.clone())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceDecision {
    pub index: usize,
    pub text: String,
    pub assigned: Option<String>,
    pub scores: Vec<ClassScore>,
}

pub fn classify_sentence(
    model: &AutoEncoderModel,
    sentence: &Sentence,
    profiles: &[ClassProfile],
    config: &DetectorConfig,
) -> Result<SentenceDecision> {
    let v = model.encode_tokens(&sentence.tokens)?;
    let (assigned, scores) = assign(&v, profiles, config.theta)?;
    Ok(SentenceDecision {
        index: sentence.index,
        text: sentence.tokens.join(" "),
        assigned,
        scores,
    })
}

/// Per-sentence similarity scores for a batch of documents, computed in one
/// encoder pass. Documents without sentences get an empty list.
pub fn score_documents(
    model: &AutoEncoderModel,
    docs: &[Document],
    profiles: &[ClassProfile],
) -> Result<Vec<Vec<Vec<ClassScore>>>> {
    let mut seqs = Vec::new();
    for d in docs {
        for s in &d.sentences {
            seqs.push(model.vocab().encode(&s.tokens));
        }
    }
    let vectors = model.encode_batch(&seqs)?;
    let mut it = vectors.iter();
    docs.iter()
        .map(|d| {
            d.sentences
                .iter()
                .map(|_| score_vector(it.next().expect("one vector per sentence"), profiles))
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub word: String,
    pub crime_class: String,
    pub similarity: f64,
}

/// Tokens of `sentences` whose single-word encoding is within `theta` of the
/// class profile and which the dictionary does not already list for the
/// class. Sorted by similarity descending, then word.
pub fn detect_words(
    model: &AutoEncoderModel,
    sentences: &[&Sentence],
    profile: &ClassProfile,
    dictionary: &C3Dictionary,
    config: &DetectorConfig,
) -> Result<Vec<Candidate>> {
    let class = profile.id();
    let words: BTreeSet<&str> = sentences
        .iter()
        .flat_map(|s| s.tokens.iter().map(String::as_str))
        .filter(|w| w.chars().count() >= config.min_word_len)
        .filter(|w| !config.stopwords.contains(*w))
        .filter(|w| !dictionary.contains(w, class))
        .collect();
    let words: Vec<&str> = words.into_iter().collect();
    if words.is_empty() {
        return Ok(Vec::new());
    }
    let vectors = model.encode_words(&words)?;
    let mut out = Vec::new();
    for (w, v) in words.iter().zip(&vectors) {
        let sim = cosine_similarity(v.as_slice(), profile.mean_vector.as_slice())?;
        if sim >= config.theta {
            out.push(Candidate {
                word: w.to_string(),
                crime_class: class.to_string(),
                similarity: sim,
            });
        }
    }
    sort_candidates(&mut out);
    Ok(out)
}

fn sort_candidates(c: &mut [Candidate]) {
    c.sort_by(|a, b| {
        b.similarity
            .total_cmp(&a.similarity)
            .then_with(|| a.crime_class.cmp(&b.crime_class))
            .then_with(|| a.word.cmp(&b.word))
    });
}

/// Returns a copy of `dictionary` with the candidates added as detected
/// entries of `class`.
pub fn update_dictionary(
    dictionary: &C3Dictionary,
    candidates: &[Candidate],
    class: &str,
    date: NaiveDate,
) -> Result<C3Dictionary> {
    let mut out = dictionary.clone();
    for c in candidates {
        out.insert(DictionaryEntry {
            word: c.word.clone(),
            crime_class: class.to_string(),
            date_added: date,
            source: EntrySource::Detected,
        })?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub document_id: String,
    pub sentences: Vec<SentenceDecision>,
    pub candidates: Vec<Candidate>,
    pub updated_dictionary: C3Dictionary,
}

impl DetectionResult {
    pub fn sentence_labels(&self) -> Vec<Option<String>> {
        self.sentences.iter().map(|s| s.assigned.clone()).collect()
    }
}

/// Classifies every sentence, extracts candidates per assigned class and
/// folds them into a new dictionary dated `date` (the document's date when
/// `None`).
pub fn detect_document(
    model: &AutoEncoderModel,
    document: &Document,
    profiles: &[ClassProfile],
    dictionary: &C3Dictionary,
    config: &DetectorConfig,
    date: Option<NaiveDate>,
) -> Result<DetectionResult> {
    config.validate()?;
    let sentences = document
        .sentences
        .iter()
        .map(|s| classify_sentence(model, s, profiles, config))
        .collect::<Result<Vec<_>>>()?;
    let date = date
        .or(document.date)
        .unwrap_or_else(|| NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid date"));
    let mut candidates = Vec::new();
    let mut updated = dictionary.clone();
    let mut ordered: Vec<&ClassProfile> = profiles.iter().collect();
    ordered.sort_by(|a, b| a.id().cmp(b.id()));
    for profile in ordered {
        let assigned: Vec<&Sentence> = document
            .sentences
            .iter()
            .zip(&sentences)
            .filter(|(_, d)| d.assigned.as_deref() == Some(profile.id()))
            .map(|(s, _)| s)
            .collect();
        if assigned.is_empty() {
            continue;
        }
        let found = detect_words(model, &assigned, profile, dictionary, config)?;
        updated = update_dictionary(&updated, &found, profile.id(), date)?;
        candidates.extend(found);
    }
    sort_candidates(&mut candidates);
    Ok(DetectionResult {
        document_id: document.id.clone(),
        sentences,
        candidates,
        updated_dictionary: updated,
    })
}
