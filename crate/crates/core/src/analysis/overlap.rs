use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::detector::C3Dictionary;

/// One class's dictionary words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassWords {
    pub class: String,
    pub words: BTreeSet<String>,
}

impl ClassWords {
    pub fn new<I, S>(class: impl Into<String>, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            class: class.into(),
            words: words.into_iter().map(Into::into).collect(),
        }
    }

    pub fn from_dictionary(dictionary: &C3Dictionary, class: &str) -> Self {
        Self::new(class, dictionary.words_for(class))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentOverlap {
    pub doc_id: String,
    /// Share of the document's tokens found in each class dictionary.
    pub ratios: BTreeMap<String, f64>,
    pub is_mixed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub classes: [String; 2],
    pub overlap_words: Vec<String>,
    pub per_document: Vec<DocumentOverlap>,
}

/// Words listed by both classes, plus per-document hit ratios. A document
/// is mixed when both ratios are positive.
pub fn detect_overlap(a: &ClassWords, b: &ClassWords, docs: &[Document]) -> OverlapReport {
    let overlap_words = a.words.intersection(&b.words).cloned().collect();
    let per_document = docs
        .iter()
        .map(|d| {
            let tokens: Vec<&str> = d.tokens().collect();
            let ratio = |words: &BTreeSet<String>| {
                if tokens.is_empty() {
                    0.0
                } else {
                    tokens.iter().filter(|t| words.contains(**t)).count() as f64
                        / tokens.len() as f64
                }
            };
            let (ra, rb) = (ratio(&a.words), ratio(&b.words));
            DocumentOverlap {
                doc_id: d.id.clone(),
                ratios: BTreeMap::from([(a.class.clone(), ra), (b.class.clone(), rb)]),
                is_mixed: ra > 0.0 && rb > 0.0,
            }
        })
        .collect();
    OverlapReport {
        classes: [a.class.clone(), b.class.clone()],
        overlap_words,
        per_document,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let a = ClassWords::new("drugs", ["ice", "hub"]);
        let b = ClassWords::new("sex", ["hub", "slave"]);
        let docs = vec![
            Document::new("1", "nothing to see", "general", None),
            Document::new("2", "ice and slave", "general", None),
        ];
        let r = detect_overlap(&a, &b, &docs);
        assert_eq!(r.overlap_words, vec!["hub"]);
        assert_eq!(r.per_document[0].ratios["drugs"], 0.0);
        assert!(!r.per_document[0].is_mixed);
        assert!((r.per_document[1].ratios["sex"] - 1.0 / 3.0).abs() < 1e-12);
        assert!(r.per_document[1].is_mixed);
    }

    proptest! {
        #[test]
        fn intersection_matches_nested_loops(
            xs in prop::collection::vec("[a-e]{1,2}", 0..30),
            ys in prop::collection::vec("[a-e]{1,2}", 0..30),
        ) {
            let a = ClassWords::new("a", xs.clone());
            let b = ClassWords::new("b", ys.clone());
            let got = detect_overlap(&a, &b, &[]).overlap_words;
            let mut brute = Vec::new();
            for x in &xs {
                for y in &ys {
                    if x == y && !brute.contains(x) {
                        brute.push(x.clone());
                    }
                }
            }
            brute.sort();
            prop_assert_eq!(got, brute);
        }

        #[test]
        fn ratios_are_fractions(text in "[a-c ]{0,40}") {
            let a = ClassWords::new("a", ["a", "b"]);
            let b = ClassWords::new("b", ["b", "c"]);
            let r = detect_overlap(&a, &b, &[Document::new("d", text, "x", None)]);
            for v in r.per_document[0].ratios.values() {
                prop_assert!((0.0..=1.0).contains(v));
            }
        }
    }
}
