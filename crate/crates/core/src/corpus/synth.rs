//! Seeded synthetic corpora with planted coded words.
//!
//! Crime-class documents are short posts over a Zipf-distributed general
//! vocabulary with one to three planted code words drawn from a single
//! sub-lexicon of the class, plus a few class "context" words that also leak
//! into general posts at a low rate. Documents dated on the latest date carry
//! the class's novel words instead, which never occur anywhere else.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{clean_text, CrimeClass, Document, GENERAL};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassLexicon {
    pub class: CrimeClass,
    /// Planted code words grouped into sub-lexicons (taxonomy ground truth).
    pub sub_lexicons: Vec<Vec<String>>,
    /// Words planted only in latest-date documents.
    #[serde(default)]
    pub novel_words: Vec<String>,
}

impl ClassLexicon {
    pub fn visible_words(&self) -> impl Iterator<Item = &str> {
        self.sub_lexicons.iter().flatten().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub classes: Vec<ClassLexicon>,
    /// Words allowed in more than one class.
    #[serde(default)]
    pub overlap_words: Vec<String>,
    pub docs_per_class: usize,
    #[serde(default)]
    pub recent_docs_per_class: usize,
    #[serde(default)]
    pub general_docs: usize,
    pub general_vocab_size: usize,
    #[serde(default = "default_context_words")]
    pub context_words_per_class: usize,
    #[serde(default = "default_min_len")]
    pub min_len: usize,
    #[serde(default = "default_max_len")]
    pub max_len: usize,
    #[serde(default = "default_overlap_rate")]
    pub overlap_rate: f64,
    #[serde(default = "default_general_context_rate")]
    pub general_context_rate: f64,
    #[serde(default = "default_start_date")]
    pub start_date: NaiveDate,
    #[serde(default = "default_latest_date")]
    pub latest_date: NaiveDate,
    pub seed: u64,
}

fn default_context_words() -> usize {
    6
}
fn default_min_len() -> usize {
    6
}
fn default_max_len() -> usize {
    10
}
fn default_overlap_rate() -> f64 {
    0.1
}
fn default_general_context_rate() -> f64 {
    0.15
}
fn default_start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2022, 1, 1).unwrap()
}
fn default_latest_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2022, 12, 31).unwrap()
}

fn words(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

impl SyntheticSpec {
    /// Two crime classes with seven five-word sub-lexicons each, eight novel
    /// words per class and four shared words.
    pub fn desk(seed: u64) -> Self {
        let drugs = ClassLexicon {
            class: CrimeClass::new("drugs", "Drugs"),
            sub_lexicons: vec![
                words(&["rohypnol", "halcion", "sleeper", "dreamer", "nodoff"]),
                words(&["ice", "crystal", "glass", "shard", "icekeki"]),
                words(&["meth", "speed", "tina", "crank", "upper"]),
                words(&["drop", "pickup", "stash", "dropoff", "fcfs"]),
                words(&["hub", "candy", "liquid", "molly", "roll"]),
                words(&["weed", "grass", "kush", "bud", "ganja"]),
                words(&["rush", "popper", "propofol", "milk", "hopper"]),
            ],
            novel_words: words(&[
                "stilnox", "bingdu", "chansul", "hwinsul", "snowwhite", "bbongo", "taiproduct",
                "jelly",
            ]),
        };
        let sex = ClassLexicon {
            class: CrimeClass::new("sex", "Sex crimes"),
            sub_lexicons: vec![
                words(&["teleline", "invite", "event", "room", "link"]),
                words(&["cougar", "doll", "sugar", "daddy", "babe"]),
                words(&["offmeet", "offline", "squirt", "petting", "meetoff"]),
                words(&["master", "slave", "obey", "collar", "leash"]),
                words(&["neto", "netocouple", "couple", "swap", "kakao"]),
                words(&["bondage", "fetish", "feti", "rope", "tied"]),
                words(&["cam", "webcam", "nudes", "vid", "mv"]),
            ],
            novel_words: words(&[
                "phonesex", "lineid", "gajoo", "allnude", "purv", "spon", "jogun", "sponsor",
            ]),
        };
        Self {
            classes: vec![drugs, sex],
            overlap_words: words(&["ecstasy", "adderall", "zolpidem", "escort"]),
            docs_per_class: 500,
            recent_docs_per_class: 40,
            general_docs: 0,
            general_vocab_size: 300,
            context_words_per_class: default_context_words(),
            min_len: default_min_len(),
            max_len: default_max_len(),
            overlap_rate: default_overlap_rate(),
            general_context_rate: default_general_context_rate(),
            start_date: default_start_date(),
            latest_date: default_latest_date(),
            seed,
        }
    }

    pub fn class_ids(&self) -> Vec<String> {
        self.classes.iter().map(|c| c.class.id.clone()).collect()
    }

    pub fn lexicon(&self, class_id: &str) -> Option<&ClassLexicon> {
        self.classes.iter().find(|c| c.class.id == class_id)
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes.len() < 2 {
            return Err(Error::InvalidConfig("at least two crime classes required".into()));
        }
        if self.min_len == 0 || self.min_len > self.max_len {
            return Err(Error::InvalidConfig("require 0 < min_len <= max_len".into()));
        }
        if self.max_len < 4 {
            return Err(Error::InvalidConfig("max_len must be at least 4".into()));
        }
        if self.latest_date <= self.start_date {
            return Err(Error::InvalidConfig("latest_date must follow start_date".into()));
        }
        for rate in [self.overlap_rate, self.general_context_rate] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::InvalidConfig(format!("rate {rate} outside [0, 1]")));
            }
        }
        let mut ids = BTreeSet::new();
        let overlap: BTreeSet<&str> = self.overlap_words.iter().map(String::as_str).collect();
        let mut owner: BTreeMap<&str, &str> = BTreeMap::new();
        let mut visible: BTreeSet<&str> = overlap.clone();
        for lex in &self.classes {
            if lex.class.id == GENERAL || !ids.insert(lex.class.id.as_str()) {
                return Err(Error::InvalidConfig(format!(
                    "invalid or duplicate class id `{}`",
                    lex.class.id
                )));
            }
            if lex.sub_lexicons.is_empty() || lex.sub_lexicons.iter().any(Vec::is_empty) {
                return Err(Error::InvalidConfig(format!(
                    "class `{}` needs non-empty sub-lexicons",
                    lex.class.id
                )));
            }
            for w in lex.visible_words().chain(lex.novel_words.iter().map(String::as_str)) {
                if w.is_empty() || clean_text(w) != w || w.contains(' ') {
                    return Err(Error::InvalidConfig(format!(
                        "planted word `{w}` is not a clean single token"
                    )));
                }
                match owner.insert(w, lex.class.id.as_str()) {
                    Some(prev) if prev != lex.class.id && !overlap.contains(w) => {
                        return Err(Error::OverlappingLexicon(w.to_string()))
                    }
                    Some(prev) if prev == lex.class.id => {
                        return Err(Error::InvalidConfig(format!(
                            "word `{w}` listed twice in class `{prev}`"
                        )))
                    }
                    _ => {}
                }
            }
            visible.extend(lex.visible_words());
        }
        for lex in &self.classes {
            if let Some(w) = lex.novel_words.iter().find(|w| visible.contains(w.as_str())) {
                return Err(Error::InvalidConfig(format!(
                    "novel word `{w}` also appears in a training-visible lexicon"
                )));
            }
        }
        if self.recent_docs_per_class > 0 && self.classes.iter().any(|c| c.novel_words.is_empty())
        {
            return Err(Error::InvalidConfig(
                "recent documents require novel words for every class".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedWord {
    pub word: String,
    pub is_novel: bool,
    #[serde(default)]
    pub is_overlap: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sub_lexicon: Option<usize>,
}

/// Sidecar annotation for one generated document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldRecord {
    pub doc_id: String,
    pub class: String,
    pub planted_words: Vec<PlantedWord>,
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub documents: Vec<Document>,
    pub gold: Vec<GoldRecord>,
    pub general_vocab: Vec<String>,
    pub context_words: BTreeMap<String, Vec<String>>,
}

const ONSETS: &[&str] = &[
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "ch", "br", "tr",
];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u", "ai", "ou"];

fn pseudo_words(n: usize, taken: &BTreeSet<String>, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let syllables = rng.random_range(2..=3);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push_str(ONSETS.choose(rng).unwrap());
            w.push_str(VOWELS.choose(rng).unwrap());
        }
        if rng.random_bool(0.3) {
            w.push_str(["n", "r", "s", "l"].choose(rng).unwrap());
        }
        if !taken.contains(&w) && seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

struct Renderer {
    general: Vec<String>,
    zipf: WeightedIndex<f64>,
}

impl Renderer {
    fn filler(&self, rng: &mut ChaCha8Rng) -> String {
        self.general[self.zipf.sample(rng)].clone()
    }

    /// Places `planted` (and `context`) into a post of random length filled
    /// with general words, then adds surface noise removed by cleaning.
    fn render(
        &self,
        planted: &[String],
        context: &[String],
        min_len: usize,
        max_len: usize,
        rng: &mut ChaCha8Rng,
    ) -> String {
        let len = rng
            .random_range(min_len..=max_len)
            .max(planted.len() + context.len());
        let mut slots: Vec<(String, bool)> = planted.iter().map(|w| (w.clone(), true)).collect();
        slots.extend(context.iter().map(|w| (w.clone(), false)));
        while slots.len() < len {
            slots.push((self.filler(rng), false));
        }
        slots.shuffle(rng);
        let mut parts = Vec::with_capacity(slots.len() + 1);
        for (i, (w, is_planted)) in slots.into_iter().enumerate() {
            let mut token = w;
            if is_planted && rng.random_bool(0.25) {
                token = format!("#{token}");
            } else if !is_planted && rng.random_bool(0.05) {
                token = format!("{token}{}", rng.random_range(1..100));
            }
            if i == 0 {
                let mut chars = token.chars();
                if let Some(first) = chars.next() {
                    token = first.to_uppercase().chain(chars).collect();
                }
            }
            parts.push(token);
        }
        let mut text = parts.join(" ");
        match rng.random_range(0..6) {
            0 => text.push('.'),
            1 => text.push_str("!!"),
            2 => text.push('?'),
            3 => text.push_str(" 🔥"),
            _ => {}
        }
        text
    }
}

fn random_date(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> NaiveDate {
    let span = (spec.latest_date - spec.start_date).num_days();
    spec.start_date + chrono::Duration::days(rng.random_range(0..span))
}

/// Generates the corpus and its gold annotations. Fully determined by the
/// spec (including its seed).
pub fn generate_synthetic_corpus(spec: &SyntheticSpec) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut taken: BTreeSet<String> = spec.overlap_words.iter().cloned().collect();
    for lex in &spec.classes {
        taken.extend(lex.visible_words().map(str::to_owned));
        taken.extend(lex.novel_words.iter().cloned());
    }
    let general_vocab = pseudo_words(spec.general_vocab_size.max(1), &taken, &mut rng);
    let weights: Vec<f64> = (0..general_vocab.len())
        .map(|r| 1.0 / (r as f64 + 2.0))
        .collect();
    let renderer = Renderer {
        zipf: WeightedIndex::new(&weights).expect("positive weights"),
        general: general_vocab.clone(),
    };

    // Context words come from the middle of the frequency ranking.
    let mut context_words = BTreeMap::new();
    let mut next = general_vocab.len() / 4;
    for lex in &spec.classes {
        let mut chosen = Vec::new();
        for _ in 0..spec.context_words_per_class {
            if let Some(w) = general_vocab.get(next) {
                chosen.push(w.clone());
                next += 1;
            }
        }
        context_words.insert(lex.class.id.clone(), chosen);
    }

    let mut documents = Vec::new();
    let mut gold = Vec::new();

    for lex in &spec.classes {
        let id = &lex.class.id;
        let ctx = &context_words[id];
        for i in 0..spec.docs_per_class {
            let sub = rng.random_range(0..lex.sub_lexicons.len());
            let pool = &lex.sub_lexicons[sub];
            let k = rng.random_range(1..=3usize).min(pool.len());
            let mut planted: Vec<PlantedWord> = pool
                .choose_multiple(&mut rng, k)
                .map(|w| PlantedWord {
                    word: w.clone(),
                    is_novel: false,
                    is_overlap: false,
                    sub_lexicon: Some(sub),
                })
                .collect();
            if k >= 2 && !spec.overlap_words.is_empty() && rng.random_bool(spec.overlap_rate) {
                let w = spec.overlap_words.choose(&mut rng).unwrap().clone();
                planted[k - 1] = PlantedWord {
                    word: w,
                    is_novel: false,
                    is_overlap: true,
                    sub_lexicon: None,
                };
            }
            let n_ctx = rng.random_range(1..=2usize).min(ctx.len());
            let context: Vec<String> = ctx.choose_multiple(&mut rng, n_ctx).cloned().collect();
            let surface: Vec<String> = planted.iter().map(|p| p.word.clone()).collect();
            let text = renderer.render(&surface, &context, spec.min_len, spec.max_len, &mut rng);
            let doc_id = format!("{id}-{i:05}");
            let date = random_date(spec, &mut rng);
            documents.push(Document::new(doc_id.clone(), text, id.clone(), Some(date)));
            gold.push(GoldRecord {
                doc_id,
                class: id.clone(),
                planted_words: planted,
            });
        }
        for i in 0..spec.recent_docs_per_class {
            let k = rng.random_range(1..=2usize).min(lex.novel_words.len());
            let planted: Vec<PlantedWord> = lex
                .novel_words
                .choose_multiple(&mut rng, k)
                .map(|w| PlantedWord {
                    word: w.clone(),
                    is_novel: true,
                    is_overlap: false,
                    sub_lexicon: None,
                })
                .collect();
            let n_ctx = rng.random_range(1..=2usize).min(ctx.len());
            let context: Vec<String> = ctx.choose_multiple(&mut rng, n_ctx).cloned().collect();
            let surface: Vec<String> = planted.iter().map(|p| p.word.clone()).collect();
            let text = renderer.render(&surface, &context, spec.min_len, spec.max_len, &mut rng);
            let doc_id = format!("{id}-r{i:04}");
            documents.push(Document::new(
                doc_id.clone(),
                text,
                id.clone(),
                Some(spec.latest_date),
            ));
            gold.push(GoldRecord {
                doc_id,
                class: id.clone(),
                planted_words: planted,
            });
        }
    }

    let all_context: Vec<&String> = context_words.values().flatten().collect();
    for i in 0..spec.general_docs {
        let context: Vec<String> =
            if !all_context.is_empty() && rng.random_bool(spec.general_context_rate) {
                vec![(*all_context.choose(&mut rng).unwrap()).clone()]
            } else {
                Vec::new()
            };
        let text = renderer.render(&[], &context, spec.min_len, spec.max_len, &mut rng);
        let doc_id = format!("{GENERAL}-{i:05}");
        let date = random_date(spec, &mut rng);
        documents.push(Document::new(doc_id.clone(), text, GENERAL, Some(date)));
        gold.push(GoldRecord {
            doc_id,
            class: GENERAL.to_string(),
            planted_words: Vec::new(),
        });
    }

    Ok(SyntheticCorpus {
        documents,
        gold,
        general_vocab,
        context_words,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::DocumentRecord;

    fn small(seed: u64) -> SyntheticSpec {
        let mut spec = SyntheticSpec::desk(seed);
        spec.docs_per_class = 120;
        spec.recent_docs_per_class = 20;
        spec.general_docs = 150;
        spec
    }

    #[test]
    fn produces_labelled_documents_and_gold() {
        let mut spec = SyntheticSpec::desk(1);
        spec.recent_docs_per_class = 0;
        let corpus = generate_synthetic_corpus(&spec).unwrap();
        assert_eq!(corpus.documents.len(), 1000);
        assert_eq!(corpus.gold.len(), 1000);
        for (doc, g) in corpus.documents.iter().zip(&corpus.gold) {
            assert_eq!(doc.id, g.doc_id);
            assert!((1..=3).contains(&g.planted_words.len()));
            let toks: Vec<&str> = doc.tokens().collect();
            for p in &g.planted_words {
                assert!(toks.contains(&p.word.as_str()), "{} missing in {:?}", p.word, toks);
            }
        }
    }

    #[test]
    fn zero_docs_gives_empty_corpus() {
        let mut spec = SyntheticSpec::desk(1);
        spec.docs_per_class = 0;
        spec.recent_docs_per_class = 0;
        assert!(generate_synthetic_corpus(&spec).unwrap().documents.is_empty());
    }

    #[test]
    fn same_seed_same_bytes() {
        let render = |seed| {
            let c = generate_synthetic_corpus(&small(seed)).unwrap();
            let recs: Vec<DocumentRecord> = c.documents.iter().map(|d| d.to_record()).collect();
            serde_json::to_string(&(recs, &c.gold)).unwrap()
        };
        assert_eq!(render(5), render(5));
        assert_ne!(render(5), render(6));
    }

    #[test]
    fn planted_word_placement_invariants() {
        let spec = small(3);
        let corpus = generate_synthetic_corpus(&spec).unwrap();
        for lex in &spec.classes {
            for w in lex.visible_words() {
                let in_class = corpus
                    .documents
                    .iter()
                    .any(|d| d.label == lex.class.id && d.tokens().any(|t| t == w));
                assert!(in_class, "{w} never planted in {}", lex.class.id);
            }
        }
        let planted: BTreeSet<&str> = spec
            .classes
            .iter()
            .flat_map(|l| l.visible_words().chain(l.novel_words.iter().map(String::as_str)))
            .chain(spec.overlap_words.iter().map(String::as_str))
            .collect();
        for d in corpus.documents.iter().filter(|d| d.is_general()) {
            assert!(d.tokens().all(|t| !planted.contains(t)), "{}", d.raw_text);
        }
        let novel: BTreeSet<&str> = spec
            .classes
            .iter()
            .flat_map(|l| l.novel_words.iter().map(String::as_str))
            .collect();
        for d in &corpus.documents {
            if d.tokens().any(|t| novel.contains(t)) {
                assert_eq!(d.date, Some(spec.latest_date));
            }
        }
    }

    #[test]
    fn overlapping_lexicons_are_rejected() {
        let mut spec = SyntheticSpec::desk(0);
        spec.classes[1].sub_lexicons[0].push("ice".into());
        assert!(matches!(
            generate_synthetic_corpus(&spec),
            Err(Error::OverlappingLexicon(w)) if w == "ice"
        ));
        let mut spec = SyntheticSpec::desk(0);
        spec.overlap_words.push("ice".into());
        spec.classes[1].sub_lexicons[0].push("ice".into());
        assert!(generate_synthetic_corpus(&spec).is_ok());
        let mut spec = SyntheticSpec::desk(0);
        spec.classes[0].novel_words.push("hub".into());
        assert!(generate_synthetic_corpus(&spec).is_err());
    }
}
