use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use c3_core::autoencoder::{init_model, save_checkpoint, train as train_model, Variant};
use c3_core::corpus::{build_vocabulary, Document, MixSpec, DEFAULT_VOCAB_CAP, GENERAL};
use c3_core::detector::{
    build_class_profile, detect_document, score_documents, C3Dictionary, Candidate, ClassProfile,
    SentenceDecision,
};
use c3_core::eval::{
    calibrate_theta_weighted, classify_document, default_theta_grid, gold_label, mix_weights,
};
use clap::Args;
use serde::Serialize;

use super::{classes_in, parse_weights, Weights};
use crate::config::RunConfig;
use crate::run::{manifest_for, Run};

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long, default_value = "sae")]
    pub variant: Variant,
    /// Prepared corpus directory with train.jsonl and validation.jsonl.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides `model.epochs`.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Overrides `train.general_in_training`.
    #[arg(long)]
    pub general_in_training: Option<usize>,
}

/// The crime training documents plus the first `general` non-crime ones.
fn training_documents(train: Vec<Document>, general: usize) -> Vec<Document> {
    let (mut crime, other): (Vec<Document>, Vec<Document>) =
        train.into_iter().partition(|d| d.label != GENERAL);
    crime.extend(other.into_iter().take(general));
    crime
}

pub fn train(args: TrainArgs, mut cfg: RunConfig, seed: u64) -> Result<()> {
    cfg.model.variant = args.variant;
    if let Some(e) = args.epochs {
        cfg.model.epochs = e;
    }
    if let Some(g) = args.general_in_training {
        cfg.train.general_in_training = g;
    }
    cfg.validate()?;
    let mut run = Run::new("train", seed, cfg, &args)?;
    let train_docs = run.docs(&args.corpus.join("train.jsonl"))?;
    let val_docs = run.docs(&args.corpus.join("validation.jsonl"))?;
    let docs = training_documents(train_docs, run.config.train.general_in_training);
    let val: Vec<Document> = val_docs.into_iter().filter(|d| d.label != GENERAL).collect();

    let vocab = build_vocabulary(&docs, 1, DEFAULT_VOCAB_CAP)?;
    eprintln!("{} training documents, vocabulary {}", docs.len(), vocab.len());
    let mut model = init_model(&run.config.model, &vocab)?;
    let records = train_model(&mut model, &docs, &val)?;
    for r in &records {
        eprintln!("{}", serde_json::to_string(r)?);
    }
    let out = run.output(&args.out)?;
    save_checkpoint(&model, &out)?;
    run.finish(&manifest_for(&args.out))
}

#[derive(Debug, Args, Serialize)]
pub struct ProfileArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Prepared corpus directory; profiles come from profile.jsonl.
    #[arg(long, required_unless_present = "input")]
    pub corpus: Option<PathBuf>,
    /// Explicit profile documents instead of the corpus's profile split.
    #[arg(long = "in", conflicts_with = "corpus")]
    pub input: Option<PathBuf>,
    /// Written as JSON whatever the extension.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn profile(args: ProfileArgs, cfg: RunConfig, seed: u64) -> Result<()> {
    let mut run = Run::new("profile", seed, cfg, &args)?;
    let model = run.model(&args.model)?;
    let path = match (&args.input, &args.corpus) {
        (Some(p), _) => p.clone(),
        (None, Some(c)) => c.join("profile.jsonl"),
        (None, None) => unreachable!("clap requires one of --in and --corpus"),
    };
    let docs = run.docs(&path)?;
    let classes = classes_in(&docs);
    if classes.is_empty() {
        bail!("{} holds no crime-class documents", path.display());
    }
    let mut profiles = Vec::new();
    for class in classes {
        let own: Vec<Document> = docs.iter().filter(|d| d.label == class.id).cloned().collect();
        let p = build_class_profile(&model, class, &own)?;
        eprintln!("{}: {} documents", p.id(), p.n);
        profiles.push(p);
    }
    run.write_json(&args.out, &profiles)?;
    run.finish(&manifest_for(&args.out))
}

#[derive(Debug, Args, Serialize)]
pub struct DetectArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub profiles: PathBuf,
    /// Starting dictionary; empty when omitted.
    #[arg(long)]
    pub dict: Option<PathBuf>,
    /// Documents to scan, in order; each one's candidates join the
    /// dictionary before the next is scanned.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Overrides `detector.theta`.
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Where the extended dictionary goes; defaults to `<out>.dictionary.json`.
    #[arg(long)]
    pub dict_out: Option<PathBuf>,
}

#[derive(Serialize)]
struct DocumentDetection {
    document_id: String,
    label: Option<String>,
    sentences: Vec<SentenceDecision>,
    candidates: Vec<Candidate>,
}

#[derive(Serialize)]
struct DetectionReport<'a> {
    theta: f64,
    documents: Vec<DocumentDetection>,
    dictionary: &'a C3Dictionary,
}

pub fn detect(args: DetectArgs, mut cfg: RunConfig, seed: u64) -> Result<()> {
    if let Some(t) = args.theta {
        cfg.detector.theta = t;
    }
    cfg.validate()?;
    let mut run = Run::new("detect", seed, cfg, &args)?;
    let model = run.model(&args.model)?;
    let profiles: Vec<ClassProfile> = run.json(&args.profiles)?;
    let mut dictionary = match &args.dict {
        Some(p) => run.dictionary(p)?,
        None => C3Dictionary::new(),
    };
    let docs = run.docs(&args.input)?;
    let mut documents = Vec::with_capacity(docs.len());
    let mut found = 0;
    for doc in &docs {
        let r = detect_document(&model, doc, &profiles, &dictionary, &run.config.detector, None)?;
        found += r.candidates.len();
        documents.push(DocumentDetection {
            label: classify_document(&r.sentence_labels()),
            document_id: r.document_id,
            sentences: r.sentences,
            candidates: r.candidates,
        });
        dictionary = r.updated_dictionary;
    }
    eprintln!("{} documents, {found} new dictionary entries", docs.len());
    let report = DetectionReport {
        theta: run.config.detector.theta,
        documents,
        dictionary: &dictionary,
    };
    run.write_json(&args.out, &report)?;
    let dict_out = args
        .dict_out
        .clone()
        .unwrap_or_else(|| args.out.with_extension("dictionary.json"));
    run.write_json(&dict_out, &dictionary)?;
    run.finish(&manifest_for(&args.out))
}

#[derive(Debug, Args, Serialize)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub profiles: PathBuf,
    /// Labelled documents, typically the validation split.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Reweight the documents to a mixture such as `general=8,drugs=1,sex=1`;
    /// every document counts once when omitted.
    #[arg(long, value_parser = parse_weights)]
    pub mix: Option<Weights>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn calibrate(args: CalibrateArgs, cfg: RunConfig, seed: u64) -> Result<()> {
    let mut run = Run::new("calibrate-theta", seed, cfg, &args)?;
    let model = run.model(&args.model)?;
    let profiles: Vec<ClassProfile> = run.json(&args.profiles)?;
    let docs = run.docs(&args.input)?;
    let classes: Vec<String> = profiles.iter().map(|p| p.id().to_string()).collect();
    let weights = match &args.mix {
        Some(Weights(parts)) => {
            let labels: Vec<&str> = parts.iter().map(|(l, _)| l.as_str()).collect();
            let w: Vec<f64> = parts.iter().map(|(_, w)| *w).collect();
            let mix = MixSpec::from_weights("calibration", &labels, &w, docs.len())?;
            mix_weights(&docs, &mix)?
        }
        None => vec![1.0; docs.len()],
    };
    let scores = score_documents(&model, &docs, &profiles)?;
    let gold: Vec<Option<String>> = docs.iter().map(|d| gold_label(d, &classes)).collect();
    let calibration =
        calibrate_theta_weighted(&scores, &gold, &weights, &classes, &default_theta_grid())
            .context("calibrating theta")?;
    println!("theta {:.2} macro-F1 {:.4}", calibration.theta, calibration.macro_f1);
    run.write_json(&args.out, &calibration)?;
    run.finish(&manifest_for(&args.out))
}
