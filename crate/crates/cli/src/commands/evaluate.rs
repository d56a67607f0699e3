use std::path::PathBuf;

use anyhow::{bail, Result};
use c3_core::autoencoder::{AutoEncoderModel, Variant};
use c3_core::corpus::{CorpusSplit, MixSpec, GENERAL};
use c3_core::eval::{run_experiment_with_models, standard_mixes, ExperimentData, ExperimentSpec};
use clap::Args;
use serde::{Deserialize, Serialize};

use super::classes_in;
use crate::config::RunConfig;
use crate::run::Run;

/// Experiment file. The model configuration comes from the run config;
/// each cell overrides its variant and seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateSpec {
    #[serde(default = "default_variants")]
    pub variants: Vec<Variant>,
    /// Model seeds; the run seed when empty.
    #[serde(default)]
    pub seeds: Vec<u64>,
    /// Fixed threshold; calibrated per mix when absent.
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default)]
    pub profiles_from_test: bool,
    #[serde(default)]
    pub mixes: Vec<MixSpec>,
    /// Adds the five standard mixtures with a 5:5 mix of this size.
    #[serde(default)]
    pub standard_mixes: Option<usize>,
}

fn default_variants() -> Vec<Variant> {
    vec![Variant::Sae]
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    /// Experiment spec as TOML or JSON.
    #[arg(long)]
    pub spec: PathBuf,
    /// Prepared corpus directory.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Receives report.json, tables.txt and manifest.json.
    #[arg(long)]
    pub out: PathBuf,
    /// Trained checkpoints to reuse for matching variant and seed cells.
    #[arg(long)]
    pub model: Vec<PathBuf>,
    /// Overrides `train.general_in_training`.
    #[arg(long)]
    pub general_in_training: Option<usize>,
}

pub fn evaluate(args: EvaluateArgs, mut cfg: RunConfig, seed: u64) -> Result<()> {
    if let Some(g) = args.general_in_training {
        cfg.train.general_in_training = g;
    }
    cfg.validate()?;
    let mut run = Run::new("evaluate", seed, cfg, &args)?;
    let file: EvaluateSpec = run.structured(&args.spec)?;
    let split = CorpusSplit {
        train: run.docs(&args.corpus.join("train.jsonl"))?,
        validation: run.docs(&args.corpus.join("validation.jsonl"))?,
        test: run.docs(&args.corpus.join("test.jsonl"))?,
        profile: run.docs(&args.corpus.join("profile.jsonl"))?,
        seed,
    };
    let classes = classes_in(&split.train);
    let mut mixes = file.mixes.clone();
    if let Some(base) = file.standard_mixes {
        let [a, b] = &classes[..] else {
            bail!("standard mixes need exactly two crime classes, found {}", classes.len());
        };
        mixes.extend(standard_mixes(GENERAL, &a.id, &b.id, base)?);
    }
    let spec = ExperimentSpec {
        variants: file.variants.clone(),
        mixes,
        theta: file.theta,
        seeds: if file.seeds.is_empty() { vec![seed] } else { file.seeds.clone() },
        model: run.config.model.clone(),
        profiles_from_test: file.profiles_from_test,
    };
    spec.validate()?;
    let models = args
        .model
        .iter()
        .map(|p| run.model(p))
        .collect::<Result<Vec<AutoEncoderModel>>>()?;
    let data = ExperimentData::from_split(&split, &classes, run.config.train.general_in_training);
    let report = run_experiment_with_models(&spec, &data, &models)?;
    let tables = report.render_tables();
    print!("{tables}");
    run.write_json(&args.out.join("report.json"), &report)?;
    run.write_text(&args.out.join("tables.txt"), &tables)?;
    run.finish(&args.out.join("manifest.json"))
}
