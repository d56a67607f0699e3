use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntrySource {
    Seed,
    Detected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DictionaryEntry {
    pub word: String,
    pub crime_class: String,
    pub date_added: NaiveDate,
    pub source: EntrySource,
}

/// Coded-word dictionary keyed by `(class, word)`. Iteration and
/// serialisation are ordered by class, then word.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct C3Dictionary {
    entries: BTreeMap<(String, String), DictionaryEntry>,
}

#[derive(Serialize, Deserialize)]
struct DictionaryFile {
    entries: Vec<DictionaryEntry>,
}

impl Serialize for C3Dictionary {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DictionaryFile {
            entries: self.entries.values().cloned().collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for C3Dictionary {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let file = DictionaryFile::deserialize(d)?;
        let mut dict = C3Dictionary::default();
        for e in file.entries {
            dict.insert(e).map_err(serde::de::Error::custom)?;
        }
        Ok(dict)
    }
}

impl C3Dictionary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an entry; words are stored lowercase. A second entry for the
    /// same `(word, class)` is rejected.
    pub fn insert(&mut self, mut entry: DictionaryEntry) -> Result<()> {
        entry.word = entry.word.to_lowercase();
        let key = (entry.crime_class.clone(), entry.word.clone());
        if self.entries.contains_key(&key) {
            return Err(Error::DuplicateEntry {
                word: entry.word,
                class: entry.crime_class,
            });
        }
        self.entries.insert(key, entry);
        Ok(())
    }

    pub fn contains(&self, word: &str, class: &str) -> bool {
        self.entries
            .contains_key(&(class.to_string(), word.to_lowercase()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &DictionaryEntry> {
        self.entries.values()
    }

    pub fn words_for(&self, class: &str) -> Vec<&str> {
        self.entries
            .values()
            .filter(|e| e.crime_class == class)
            .map(|e| e.word.as_str())
            .collect()
    }

    pub fn classes(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self.entries.keys().map(|(c, _)| c.as_str()).collect();
        out.dedup();
        out
    }

    /// Entries of a single class.
    pub fn restricted_to(&self, class: &str) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .filter(|((c, _), _)| c == class)
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::json(path.display().to_string(), e))?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}
