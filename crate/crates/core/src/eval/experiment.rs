use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::metrics::{classify_document, precision_recall_f1, ClassMetrics, MetricsReport};
use crate::autoencoder::{init_model, reconstruction_error_rate, train, AutoEncoderModel, ModelConfig, Variant};
use crate::corpus::{build_vocabulary, mix_test_set, CorpusSplit, CrimeClass, Document, MixSpec, DEFAULT_VOCAB_CAP};
use crate::detector::{assign_scores, build_class_profile, score_documents, ClassProfile, ClassScore};
use crate::error::{Error, Result};

/// Published two-step result on the original (unavailable) corpus, kept as
/// context in rendered reports and never used as an oracle.
pub const REFERENCE_NOTE: &str =
    "reference on the original corpus (not reproducible here): Two-step(SAE) P/R/F1 = 0.991/0.991/0.991";

/// Per-sentence scores of one document.
pub type DocumentScores = Vec<Vec<ClassScore>>;

/// Document predictions at threshold `theta`: sentence argmax, then
/// majority vote.
pub fn predict_documents(scores: &[DocumentScores], theta: f64) -> Vec<Option<String>> {
    scores
        .iter()
        .map(|doc| {
            let labels: Vec<Option<String>> = doc.iter().map(|s| assign_scores(s, theta)).collect();
            classify_document(&labels)
        })
        .collect()
}

/// Gold document label: the crime class, or `None` for anything not in
/// `classes` (general documents).
pub fn gold_label(doc: &Document, classes: &[String]) -> Option<String> {
    classes.contains(&doc.label).then(|| doc.label.clone())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaCalibration {
    pub theta: f64,
    pub macro_f1: f64,
    /// `(theta, macro F1)` for every grid point.
    pub sweep: Vec<(f64, f64)>,
}

/// Default sweep: -1 to 1 in steps of 0.01.
pub fn default_theta_grid() -> Vec<f64> {
    (0..=200).map(|i| -1.0 + i as f64 * 0.01).collect()
}

/// Macro-F1 over `classes` where each document counts with its weight.
fn weighted_macro_f1(
    pred: &[Option<String>],
    gold: &[Option<String>],
    weights: &[f64],
    classes: &[String],
) -> f64 {
    let mut total = 0.0;
    for c in classes {
        let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
        for ((p, g), w) in pred.iter().zip(gold).zip(weights) {
            let (is_p, is_g) = (p.as_ref() == Some(c), g.as_ref() == Some(c));
            match (is_p, is_g) {
                (true, true) => tp += w,
                (true, false) => fp += w,
                (false, true) => fn_ += w,
                (false, false) => {}
            }
        }
        total += ClassMetrics::from_weights(tp, fp, fn_).f1;
    }
    total / classes.len().max(1) as f64
}

/// Picks the threshold that maximises document-level macro-F1. Among
/// equally good thresholds the median one is taken, which keeps the choice
/// away from the edges of a plateau.
pub fn calibrate_theta(
    scores: &[DocumentScores],
    gold: &[Option<String>],
    classes: &[String],
    grid: &[f64],
) -> Result<ThetaCalibration> {
    calibrate_theta_weighted(scores, gold, &vec![1.0; gold.len()], classes, grid)
}

/// As [`calibrate_theta`] with per-document weights, so a validation set
/// can stand in for a test population with other label proportions.
pub fn calibrate_theta_weighted(
    scores: &[DocumentScores],
    gold: &[Option<String>],
    weights: &[f64],
    classes: &[String],
    grid: &[f64],
) -> Result<ThetaCalibration> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty theta grid".into()));
    }
    if scores.len() != gold.len() || weights.len() != gold.len() || scores.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "{} scored documents, {} gold labels, {} weights",
            scores.len(),
            gold.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(Error::InvalidArgument("weights must be finite and non-negative".into()));
    }
    let sweep: Vec<(f64, f64)> = grid
        .iter()
        .map(|&theta| {
            let pred = predict_documents(scores, theta);
            (theta, weighted_macro_f1(&pred, gold, weights, classes))
        })
        .collect();
    let best = sweep.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<f64> = sweep.iter().filter(|s| s.1 == best).map(|s| s.0).collect();
    Ok(ThetaCalibration {
        theta: ties[ties.len() / 2],
        macro_f1: best,
        sweep,
    })
}

/// Weights that make `docs` count like a draw from `mix`: every document of
/// a label with proportion `p` weighs `p / n_label`. Labels outside the mix
/// weigh zero.
pub fn mix_weights(docs: &[Document], mix: &MixSpec) -> Result<Vec<f64>> {
    mix.validate()?;
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for d in docs {
        *counts.entry(d.label.as_str()).or_default() += 1;
    }
    for (label, p) in &mix.parts {
        if *p > 0.0 && !counts.contains_key(label.as_str()) {
            return Err(Error::InsufficientSource {
                class: label.clone(),
                needed: 1,
                available: 0,
            });
        }
    }
    Ok(docs
        .iter()
        .map(|d| {
            mix.parts
                .iter()
                .find(|(l, _)| *l == d.label)
                .map_or(0.0, |(_, p)| p / counts[d.label.as_str()] as f64)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub variants: Vec<Variant>,
    pub mixes: Vec<MixSpec>,
    /// Fixed threshold. When absent, theta is calibrated for each mix on
    /// the validation documents weighted to that mix's proportions.
    #[serde(default)]
    pub theta: Option<f64>,
    pub seeds: Vec<u64>,
    /// Base model configuration; variant and seed are set per cell.
    #[serde(default)]
    pub model: ModelConfig,
    /// Build class profiles from the crime test pools instead of the
    /// profile split. This reproduces the original setup, which lets test
    /// documents shape the profiles.
    #[serde(default)]
    pub profiles_from_test: bool,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.variants.is_empty() || self.mixes.is_empty() || self.seeds.is_empty() {
            return Err(Error::InvalidConfig(
                "experiment needs at least one variant, mix and seed".into(),
            ));
        }
        for mix in &self.mixes {
            mix.validate()?;
        }
        if let Some(t) = self.theta {
            if !(-1.0..=1.0).contains(&t) {
                return Err(Error::InvalidConfig(format!("theta {t} outside [-1, 1]")));
            }
        }
        self.model.validate()
    }
}

/// The five test mixtures for two crime classes `a` and `b`. `base` is the
/// size of the 5:5 mix; diluted mixes keep `base / 2` documents per crime
/// class where the proportions allow, and the extreme mix is sized so each
/// crime class contributes one document.
pub fn standard_mixes(general: &str, a: &str, b: &str, base: usize) -> Result<Vec<MixSpec>> {
    let per_class = (base / 2).max(1);
    let diluted = |name: &str, w: [f64; 3], crime_share: f64| {
        let total = (per_class as f64 / crime_share).round() as usize;
        MixSpec::from_weights(name, &[general, a, b], &w, total)
    };
    Ok(vec![
        MixSpec::from_weights("5:5", &[a, b], &[5.0, 5.0], base)?,
        diluted("6:2:2", [6.0, 2.0, 2.0], 0.2)?,
        diluted("8:1:1", [8.0, 1.0, 1.0], 0.1)?,
        // Published as 9.9:0.05:0.05, which does not sum to 10; read as
        // weights, that is 99:0.5:0.5.
        diluted("9.9:0.05:0.05", [9.9, 0.05, 0.05], 0.005)?,
        MixSpec::from_weights("99.99:0.005:0.005", &[general, a, b], &[99.99, 0.005, 0.005], 20_000)?,
    ])
}

/// Documents an experiment draws on. The autoencoder sees only `train`.
#[derive(Debug, Clone)]
pub struct ExperimentData {
    pub classes: Vec<CrimeClass>,
    pub train: Vec<Document>,
    /// Used for validation error and theta calibration.
    pub validation: Vec<Document>,
    /// Used only to build class profiles.
    pub profile: Vec<Document>,
    /// Test documents by label, the pools mixes are drawn from.
    pub pools: BTreeMap<String, Vec<Document>>,
}

impl ExperimentData {
    /// The training share's crime documents, plus at most
    /// `general_in_training` of its other documents, train the model. Test
    /// pools hold the test share of every label plus the remaining non-crime
    /// documents outside validation, which the model never sees.
    pub fn from_split(split: &CorpusSplit, classes: &[CrimeClass], general_in_training: usize) -> Self {
        let is_crime = |d: &Document| classes.iter().any(|c| c.id == d.label);
        let (crime_train, other_train): (Vec<&Document>, Vec<&Document>) =
            split.train.iter().partition(|d| is_crime(d));
        let mut train: Vec<Document> = crime_train.into_iter().cloned().collect();
        train.extend(other_train.iter().take(general_in_training).map(|d| (*d).clone()));
        let unused = split
            .profile
            .iter()
            .filter(|d| !is_crime(d))
            .chain(other_train.into_iter().skip(general_in_training));
        let mut pools: BTreeMap<String, Vec<Document>> = BTreeMap::new();
        for d in split.test.iter().chain(unused) {
            pools.entry(d.label.clone()).or_default().push(d.clone());
        }
        Self {
            classes: classes.to_vec(),
            train,
            validation: split.validation.clone(),
            profile: split.profile.iter().filter(|d| is_crime(d)).cloned().collect(),
            pools,
        }
    }

    pub fn class_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.classes.iter().map(|c| c.id.clone()).collect();
        ids.sort();
        ids
    }

    fn crime_only(&self, docs: &[Document]) -> Vec<Document> {
        let ids = self.class_ids();
        docs.iter().filter(|d| ids.contains(&d.label)).cloned().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentCell {
    pub variant: Variant,
    pub seed: u64,
    pub mix: String,
    pub theta: f64,
    pub n_documents: usize,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionRow {
    pub variant: Variant,
    pub seed: u64,
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub reconstruction: Vec<ReconstructionRow>,
    pub cells: Vec<ExperimentCell>,
}

impl ExperimentReport {
    pub fn cell(&self, variant: Variant, mix: &str, seed: u64) -> Option<&ExperimentCell> {
        self.cells
            .iter()
            .find(|c| c.variant == variant && c.mix == mix && c.seed == seed)
    }

    /// Reconstruction-error and per-mix metric tables as plain text.
    pub fn render_tables(&self) -> String {
        let mut out = String::from("Reconstruction error (%)\n");
        let _ = writeln!(out, "{:<6} {:>6} {:>10} {:>10} {:>10}", "model", "seed", "train", "valid", "test");
        for r in &self.reconstruction {
            let _ = writeln!(
                out,
                "{:<6} {:>6} {:>10.4} {:>10.4} {:>10.4}",
                r.variant.as_str(),
                r.seed,
                r.train,
                r.validation,
                r.test
            );
        }
        let mut mixes: Vec<&str> = Vec::new();
        for c in &self.cells {
            if !mixes.contains(&c.mix.as_str()) {
                mixes.push(&c.mix);
            }
        }
        for mix in mixes {
            let _ = writeln!(out, "\nMix {mix}");
            let _ = writeln!(
                out,
                "{:<6} {:>6} {:>7} {:>7} {:>9} {:>7} {:>7}",
                "model", "seed", "theta", "docs", "precision", "recall", "f1"
            );
            for c in self.cells.iter().filter(|c| c.mix == mix) {
                let m = c.metrics.macro_avg;
                let _ = writeln!(
                    out,
                    "{:<6} {:>6} {:>7.2} {:>7} {:>9.3} {:>7.3} {:>7.3}",
                    c.variant.as_str(),
                    c.seed,
                    c.theta,
                    c.n_documents,
                    m.precision,
                    m.recall,
                    m.f1
                );
            }
        }
        let _ = writeln!(out, "\n{REFERENCE_NOTE}");
        out
    }
}

fn profiles_for(
    model: &AutoEncoderModel,
    data: &ExperimentData,
    from_test: bool,
) -> Result<Vec<ClassProfile>> {
    data.classes
        .iter()
        .map(|c| {
            let docs: Vec<Document> = if from_test {
                data.pools.get(&c.id).cloned().unwrap_or_default()
            } else {
                data.profile.iter().filter(|d| d.label == c.id).cloned().collect()
            };
            build_class_profile(model, c.clone(), &docs)
        })
        .collect()
}

/// Trains (or reuses) one model per variant and seed, calibrates theta on
/// the validation documents unless fixed, and scores every mix. Fully
/// determined by `spec` and `data`.
pub fn run_experiment(spec: &ExperimentSpec, data: &ExperimentData) -> Result<ExperimentReport> {
    run_experiment_with_models(spec, data, &[])
}

/// As [`run_experiment`], using any supplied model whose variant and seed
/// match a cell instead of training one.
pub fn run_experiment_with_models(
    spec: &ExperimentSpec,
    data: &ExperimentData,
    pretrained: &[AutoEncoderModel],
) -> Result<ExperimentReport> {
    spec.validate()?;
    if data.train.is_empty() {
        return Err(Error::InsufficientCorpus("no training documents".into()));
    }
    let classes = data.class_ids();
    let val_crime = data.crime_only(&data.validation);
    let train_crime = data.crime_only(&data.train);
    let test_crime: Vec<Document> = classes
        .iter()
        .filter_map(|c| data.pools.get(c))
        .flatten()
        .cloned()
        .collect();
    let mut report = ExperimentReport {
        reconstruction: Vec::new(),
        cells: Vec::new(),
    };
    for &variant in &spec.variants {
        for &seed in &spec.seeds {
            let found = pretrained
                .iter()
                .find(|m| m.config().variant == variant && m.config().seed == seed);
            let trained;
            let model = match found {
                Some(m) => m,
                None => {
                    let config = ModelConfig {
                        variant,
                        seed,
                        ..spec.model.clone()
                    };
                    let vocab = build_vocabulary(&data.train, 1, DEFAULT_VOCAB_CAP)?;
                    let mut m = init_model(&config, &vocab)?;
                    train(&mut m, &data.train, &val_crime)?;
                    trained = m;
                    &trained
                }
            };
            let rate = |docs: &[Document]| -> Result<f64> {
                if docs.is_empty() {
                    Ok(f64::NAN)
                } else {
                    reconstruction_error_rate(model, docs)
                }
            };
            report.reconstruction.push(ReconstructionRow {
                variant,
                seed,
                train: rate(&train_crime)?,
                validation: rate(&val_crime)?,
                test: rate(&test_crime)?,
            });

            let profiles = profiles_for(model, data, spec.profiles_from_test)?;
            let val_scores = match spec.theta {
                Some(_) => Vec::new(),
                None => score_documents(model, &data.validation, &profiles)?,
            };
            let val_gold: Vec<Option<String>> =
                data.validation.iter().map(|d| gold_label(d, &classes)).collect();
            for mix in &spec.mixes {
                let theta = match spec.theta {
                    Some(t) => t,
                    None => {
                        let w = mix_weights(&data.validation, mix)?;
                        calibrate_theta_weighted(&val_scores, &val_gold, &w, &classes, &default_theta_grid())?
                            .theta
                    }
                };
                let docs = mix_test_set(&data.pools, mix, seed)?;
                let scores = score_documents(model, &docs, &profiles)?;
                let pred = predict_documents(&scores, theta);
                let gold: Vec<Option<String>> = docs.iter().map(|d| gold_label(d, &classes)).collect();
                let snapshot = serde_json::json!({
                    "variant": variant,
                    "seed": seed,
                    "mix": mix,
                    "theta": theta,
                    "model": model.config(),
                });
                let metrics = precision_recall_f1(&pred, &gold, Some(&classes))?.with_config(snapshot);
                report.cells.push(ExperimentCell {
                    variant,
                    seed,
                    mix: mix.name.clone(),
                    theta,
                    n_documents: docs.len(),
                    metrics,
                });
            }
        }
    }
    Ok(report)
}
