use std::path::PathBuf;

use anyhow::{bail, Result};
use c3_core::corpus::{
    generate_synthetic_corpus, split_corpus, write_documents, write_records, Document,
    SyntheticSpec,
};
use c3_core::detector::{C3Dictionary, DictionaryEntry, EntrySource};
use clap::Args;
use serde::Serialize;

use super::{parse_ratios, Ratios};
use crate::config::RunConfig;
use crate::run::Run;

/// Words per sub-lexicon that go into the seed dictionary.
const SEED_WORDS_PER_SUBLEXICON: usize = 3;

#[derive(Debug, Args, Serialize)]
pub struct PrepareArgs {
    /// Line-delimited JSON documents with id, text, label and date.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Train:validation:test proportions.
    #[arg(long, default_value = "8:1:1", value_parser = parse_ratios)]
    pub split: Ratios,
    /// Share of each class's training documents reserved for profiles.
    #[arg(long, default_value_t = 0.1)]
    pub profile_fraction: f64,
    /// Move documents dated on the corpus's latest date to recent.jsonl
    /// instead of splitting them.
    #[arg(long)]
    pub hold_out_latest: bool,
}

pub fn prepare(args: PrepareArgs, cfg: RunConfig, seed: u64) -> Result<()> {
    let [train, validation, test] = args.split.0[..] else {
        bail!("--split needs three parts, got {}", args.split.0.len());
    };
    let mut run = Run::new("prepare", seed, cfg, &args)?;
    let docs = run.docs(&args.input)?;
    let latest = docs.iter().filter_map(|d| d.date).max();
    let (recent, rest): (Vec<Document>, Vec<Document>) = docs
        .into_iter()
        .partition(|d| args.hold_out_latest && latest.is_some() && d.date == latest);
    let split = split_corpus(
        &rest,
        (train, validation, test),
        args.profile_fraction,
        seed,
    )?;
    for (name, part) in [
        ("train.jsonl", &split.train),
        ("validation.jsonl", &split.validation),
        ("test.jsonl", &split.test),
        ("profile.jsonl", &split.profile),
        ("recent.jsonl", &recent),
    ] {
        let path = run.output(&args.out.join(name))?;
        write_documents(&path, part)?;
    }
    eprintln!(
        "train {} validation {} test {} profile {} recent {}",
        split.train.len(),
        split.validation.len(),
        split.test.len(),
        split.profile.len(),
        recent.len()
    );
    run.finish(&args.out.join("manifest.json"))
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// Generator settings as JSON or TOML; defaults to the two-class desk corpus.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub docs_per_class: Option<usize>,
    #[arg(long)]
    pub recent_docs_per_class: Option<usize>,
    #[arg(long)]
    pub general_docs: Option<usize>,
}

/// Writes documents.jsonl, gold.jsonl, spec.json and a seed dictionary
/// holding the first few words of every sub-lexicon.
pub fn synth(args: SynthArgs, cfg: RunConfig, seed: u64) -> Result<()> {
    let mut run = Run::new("synth", seed, cfg, &args)?;
    let mut spec = match &args.spec {
        Some(p) => run.structured::<SyntheticSpec>(p)?,
        None => SyntheticSpec::desk(seed),
    };
    spec.seed = seed;
    if let Some(n) = args.docs_per_class {
        spec.docs_per_class = n;
    }
    if let Some(n) = args.recent_docs_per_class {
        spec.recent_docs_per_class = n;
    }
    if let Some(n) = args.general_docs {
        spec.general_docs = n;
    }
    let corpus = generate_synthetic_corpus(&spec)?;

    let mut dictionary = C3Dictionary::new();
    for lexicon in &spec.classes {
        for sub in &lexicon.sub_lexicons {
            for word in sub.iter().take(SEED_WORDS_PER_SUBLEXICON) {
                dictionary.insert(DictionaryEntry {
                    word: word.clone(),
                    crime_class: lexicon.class.id.clone(),
                    date_added: spec.start_date,
                    source: EntrySource::Seed,
                })?;
            }
        }
    }

    let docs_path = run.output(&args.out.join("documents.jsonl"))?;
    write_documents(&docs_path, &corpus.documents)?;
    let gold_path = run.output(&args.out.join("gold.jsonl"))?;
    write_records(&gold_path, &corpus.gold)?;
    run.write_json(&args.out.join("spec.json"), &spec)?;
    run.write_json(&args.out.join("dictionary.json"), &dictionary)?;
    eprintln!("{} documents, {} seed words", corpus.documents.len(), dictionary.len());
    run.finish(&args.out.join("manifest.json"))
}
