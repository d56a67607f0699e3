use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use c3_core::analysis::{
    build_taxonomy, contextual_word_vectors, detect_overlap, estimate_k, fit_outlier_model,
    project_2d, projection_method, BandMode, ClassWords, OutlierModel, Tail,
};
use c3_core::autoencoder::{AutoEncoderModel, LatentVector};
use c3_core::corpus::{read_records, write_records, Document};
use c3_core::detector::{classify_sentence, C3Dictionary, ClassProfile};
use c3_core::eval::{classify_document, emit_plot};
use clap::Args;
use serde::{Deserialize, Serialize};

use super::Auto;
use crate::config::RunConfig;
use crate::run::{manifest_for, Run};

/// The class's training and profile documents from a prepared corpus.
fn class_documents(run: &mut Run, corpus: &Path, class: &str) -> Result<Vec<Document>> {
    let mut docs = run.docs(&corpus.join("train.jsonl"))?;
    docs.extend(run.docs(&corpus.join("profile.jsonl"))?);
    docs.retain(|d| d.label == class);
    if docs.is_empty() {
        bail!("no `{class}` documents in {}", corpus.display());
    }
    Ok(docs)
}

/// Contextual vectors of `words` over `docs`, dropping words that never occur.
fn word_vectors(
    model: &AutoEncoderModel,
    docs: &[Document],
    words: &[&str],
) -> Result<Vec<(String, LatentVector)>> {
    let found = contextual_word_vectors(model, docs, words)?;
    if found.len() < words.len() {
        eprintln!("{} of {} words never occur and are skipped", words.len() - found.len(), words.len());
    }
    Ok(found.into_iter().map(|(w, v, _)| (w, v)).collect())
}

#[derive(Debug, Args, Serialize)]
pub struct NewWordsArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Prepared corpus: the band is fitted on train and profile documents,
    /// candidates come from recent.jsonl.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub class: String,
    /// Dictionary whose words for the class define the band.
    #[arg(long)]
    pub dict: PathBuf,
    /// Select recent documents by predicted class instead of by label.
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    /// Overrides `analysis.alpha`.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// `individual` or `mean-ci`; overrides `analysis.band_mode`.
    #[arg(long)]
    pub band: Option<BandMode>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct CandidateWord {
    word: String,
    sentences: usize,
    statistic: f64,
    tail: Option<Tail>,
}

#[derive(Serialize)]
struct NewWordsReport {
    class: String,
    band: OutlierModel,
    fitted_words: Vec<String>,
    /// Words absent from the model vocabulary, nearest the center first.
    candidates: Vec<CandidateWord>,
    flagged: Vec<String>,
}

pub fn new_words(args: NewWordsArgs, mut cfg: RunConfig, seed: u64) -> Result<()> {
    if let Some(a) = args.alpha {
        cfg.analysis.alpha = a;
    }
    if let Some(b) = args.band {
        cfg.analysis.band_mode = b;
    }
    cfg.validate()?;
    let mut run = Run::new("new-words", seed, cfg, &args)?;
    let model = run.model(&args.model)?;
    let dictionary = run.dictionary(&args.dict)?;
    let known = dictionary.words_for(&args.class);
    if known.is_empty() {
        bail!("dictionary lists no words for `{}`", args.class);
    }
    let fit_docs = class_documents(&mut run, &args.corpus, &args.class)?;
    let fitted = word_vectors(&model, &fit_docs, &known)?;
    let vectors: Vec<LatentVector> = fitted.iter().map(|(_, v)| v.clone()).collect();
    let band = fit_outlier_model(&vectors, run.config.analysis.alpha, run.config.analysis.band_mode)?;

    let recent = run.docs(&args.corpus.join("recent.jsonl"))?;
    let recent: Vec<Document> = match &args.profiles {
        Some(p) => {
            let profiles: Vec<ClassProfile> = run.json(p)?;
            let mut keep = Vec::new();
            for d in recent {
                let labels = d
                    .sentences
                    .iter()
                    .map(|s| Ok(classify_sentence(&model, s, &profiles, &run.config.detector)?.assigned))
                    .collect::<Result<Vec<_>>>()?;
                if classify_document(&labels).as_deref() == Some(args.class.as_str()) {
                    keep.push(d);
                }
            }
            keep
        }
        None => recent.into_iter().filter(|d| d.label == args.class).collect(),
    };
    let detector = &run.config.detector;
    let unseen: BTreeSet<&str> = recent
        .iter()
        .flat_map(Document::tokens)
        .filter(|t| !model.vocab().contains(t))
        .filter(|t| t.chars().count() >= detector.min_word_len && !detector.stopwords.contains(*t))
        .collect();
    let unseen: Vec<&str> = unseen.into_iter().collect();
    let mut candidates = Vec::new();
    for (word, v, n) in contextual_word_vectors(&model, &recent, &unseen)? {
        let statistic = band.statistic(&v)?;
        candidates.push(CandidateWord {
            word,
            sentences: n,
            statistic,
            tail: band.tail(statistic),
        });
    }
    candidates.sort_by(|a, b| a.statistic.total_cmp(&b.statistic).then_with(|| a.word.cmp(&b.word)));
    let flagged: Vec<String> = candidates
        .iter()
        .filter(|c| c.tail.is_some())
        .map(|c| c.word.clone())
        .collect();
    eprintln!(
        "band [{:.4}, {:.4}] from {} words; {} of {} unseen words flagged",
        band.lower,
        band.upper,
        fitted.len(),
        flagged.len(),
        candidates.len()
    );
    let report = NewWordsReport {
        class: args.class.clone(),
        band,
        fitted_words: fitted.into_iter().map(|(w, _)| w).collect(),
        candidates,
        flagged,
    };
    run.write_json(&args.out, &report)?;
    run.finish(&manifest_for(&args.out))
}

#[derive(Debug, Args, Serialize)]
pub struct OverlapArgs {
    /// One dictionary holding both classes, or one per class.
    #[arg(long, num_args = 1..=2, required = true)]
    pub dicts: Vec<PathBuf>,
    /// The two classes to compare; inferred when the dictionaries name exactly two.
    #[arg(long, num_args = 2)]
    pub classes: Option<Vec<String>>,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn overlap(args: OverlapArgs, cfg: RunConfig, seed: u64) -> Result<()> {
    let mut run = Run::new("overlap", seed, cfg, &args)?;
    let mut merged = C3Dictionary::new();
    for p in &args.dicts {
        let d = run.dictionary(p)?;
        for e in d.entries() {
            if !merged.contains(&e.word, &e.crime_class) {
                merged.insert(e.clone())?;
            }
        }
    }
    let (a, b) = match &args.classes {
        Some(c) => (c[0].clone(), c[1].clone()),
        None => {
            let classes = merged.classes();
            if classes.len() != 2 {
                bail!("dictionaries name {} classes; pass --classes", classes.len());
            }
            (classes[0].to_string(), classes[1].to_string())
        }
    };
    let docs = run.docs(&args.input)?;
    let report = detect_overlap(
        &ClassWords::from_dictionary(&merged, &a),
        &ClassWords::from_dictionary(&merged, &b),
        &docs,
    );
    let mixed = report.per_document.iter().filter(|d| d.is_mixed).count();
    println!("{} shared words, {mixed} mixed documents", report.overlap_words.len());
    run.write_json(&args.out, &report)?;
    run.finish(&manifest_for(&args.out))
}

/// One line of a vectors file.
#[derive(Debug, Serialize, Deserialize)]
pub struct VectorRecord {
    pub word: String,
    pub label: String,
    pub vector: Vec<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct TaxonomyArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Prepared corpus; words are embedded in the class's training and profile sentences.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub class: String,
    #[arg(long)]
    pub dict: PathBuf,
    #[arg(long, default_value = "auto")]
    pub k: Auto<usize>,
    /// Subcategory radius; `auto` is the median member distance.
    #[arg(long, default_value = "auto")]
    pub epsilon: Auto<f64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Word vectors labelled by category word, for `c3 plot`.
    #[arg(long)]
    pub vectors_out: Option<PathBuf>,
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

pub fn taxonomy(args: TaxonomyArgs, cfg: RunConfig, seed: u64) -> Result<()> {
    cfg.validate()?;
    let mut run = Run::new("taxonomy", seed, cfg, &args)?;
    let model = run.model(&args.model)?;
    let dictionary = run.dictionary(&args.dict)?;
    let words = dictionary.words_for(&args.class);
    let docs = class_documents(&mut run, &args.corpus, &args.class)?;
    let vectors = word_vectors(&model, &docs, &words)?;
    if vectors.len() < 2 {
        bail!("`{}` has {} embeddable words; need at least 2", args.class, vectors.len());
    }
    let k = match args.k.value() {
        Some(k) => k,
        None => {
            let (lo, hi) = (run.config.analysis.k_min, run.config.analysis.k_max);
            let hi = hi.min(vectors.len() - 1);
            if hi < lo {
                bail!("too few words ({}) to estimate k", vectors.len());
            }
            let latents: Vec<LatentVector> = vectors.iter().map(|(_, v)| v.clone()).collect();
            estimate_k(&latents, (lo, hi), seed)?
        }
    };
    let taxonomy = build_taxonomy(&vectors, k, args.epsilon.value(), seed)?;
    eprintln!("k = {k}, epsilon = {:.4}", taxonomy.epsilon);
    for c in &taxonomy.clusters {
        println!("{}: {}", c.category_word, c.subcategory_words.join(" "));
    }
    run.write_json(&args.out, &taxonomy)?;

    let category = |w: &str| {
        taxonomy
            .clusters
            .iter()
            .find(|c| c.members.iter().any(|m| m == w))
            .map_or_else(String::new, |c| c.category_word.clone())
    };
    let records: Vec<VectorRecord> = vectors
        .iter()
        .map(|(w, v)| VectorRecord {
            word: w.clone(),
            label: category(w),
            vector: v.0.clone(),
        })
        .collect();
    if let Some(p) = &args.vectors_out {
        let p = run.output(p)?;
        write_records(&p, &records)?;
    }
    if let Some(p) = &args.plot {
        draw(&mut run, &records, p, seed)?;
    }
    run.finish(&manifest_for(&args.out))
}

fn draw(run: &mut Run, records: &[VectorRecord], out: &Path, seed: u64) -> Result<()> {
    let vectors: Vec<LatentVector> = records.iter().map(|r| LatentVector(r.vector.clone())).collect();
    let labels: Vec<String> = records.iter().map(|r| r.label.clone()).collect();
    eprintln!("projecting {} points with {:?}", vectors.len(), projection_method(vectors.len()));
    let points = project_2d(&vectors, seed)?;
    let out = run.output(out)?;
    emit_plot(&points, &labels, &out)?;
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct PlotArgs {
    /// Line-delimited records with `word`, `label` and `vector`.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn plot(args: PlotArgs, cfg: RunConfig, seed: u64) -> Result<()> {
    let mut run = Run::new("plot", seed, cfg, &args)?;
    run.read(&args.input)?;
    let records: Vec<VectorRecord> = read_records(&args.input)?;
    draw(&mut run, &records, &args.out, seed)?;
    run.finish(&manifest_for(&args.out))
}
