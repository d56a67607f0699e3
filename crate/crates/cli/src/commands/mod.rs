pub mod analysis;
pub mod corpus;
pub mod evaluate;
pub mod model;

use std::collections::BTreeSet;
use std::path::Path;
use std::str::FromStr;

use anyhow::Result;
use c3_core::corpus::{CrimeClass, Document, GENERAL};

use crate::config::RunConfig;
use crate::Command;

pub fn dispatch(command: Command, seed: Option<u64>, config: Option<&Path>) -> Result<()> {
    let mut cfg = RunConfig::load(config)?;
    let seed = cfg.resolve_seed(seed)?;
    match command {
        Command::Prepare(a) => corpus::prepare(a, cfg, seed),
        Command::Synth(a) => corpus::synth(a, cfg, seed),
        Command::Train(a) => model::train(a, cfg, seed),
        Command::Profile(a) => model::profile(a, cfg, seed),
        Command::Detect(a) => model::detect(a, cfg, seed),
        Command::CalibrateTheta(a) => model::calibrate(a, cfg, seed),
        Command::NewWords(a) => analysis::new_words(a, cfg, seed),
        Command::Overlap(a) => analysis::overlap(a, cfg, seed),
        Command::Taxonomy(a) => analysis::taxonomy(a, cfg, seed),
        Command::Plot(a) => analysis::plot(a, cfg, seed),
        Command::Evaluate(a) => evaluate::evaluate(a, cfg, seed),
    }
}

/// Crime classes named by the labels of `docs`, in id order.
pub fn classes_in(docs: &[Document]) -> Vec<CrimeClass> {
    docs.iter()
        .filter(|d| d.label != GENERAL)
        .map(|d| d.label.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(|id| CrimeClass::new(id, id))
        .collect()
}

/// A flag value that is either `auto` or an explicit value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Auto<T> {
    Auto,
    Value(T),
}

impl<T> Auto<T> {
    pub fn value(self) -> Option<T> {
        match self {
            Auto::Auto => None,
            Auto::Value(v) => Some(v),
        }
    }
}

impl<T: FromStr> FromStr for Auto<T> {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "auto" {
            return Ok(Auto::Auto);
        }
        s.parse()
            .map(Auto::Value)
            .map_err(|_| format!("expected `auto` or a number, got `{s}`"))
    }
}

impl<T: serde::Serialize> serde::Serialize for Auto<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Auto::Auto => s.serialize_str("auto"),
            Auto::Value(v) => v.serialize(s),
        }
    }
}

/// Normalised proportions parsed from `8:1:1`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Ratios(pub Vec<f64>);

/// (label, weight) pairs parsed from `general=8,drugs=1,sex=1`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Weights(pub Vec<(String, f64)>);

pub fn parse_ratios(s: &str) -> std::result::Result<Ratios, String> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("bad ratio `{p}` in `{s}`")))
        .collect::<std::result::Result<_, _>>()?;
    let sum: f64 = parts.iter().sum();
    if parts.iter().any(|p| !p.is_finite() || *p < 0.0) || sum <= 0.0 {
        return Err(format!("ratios `{s}` must be non-negative with a positive sum"));
    }
    Ok(Ratios(parts.into_iter().map(|p| p / sum).collect()))
}

pub fn parse_weights(s: &str) -> std::result::Result<Weights, String> {
    s.split(',')
        .map(|part| {
            let (label, w) = part
                .split_once('=')
                .ok_or_else(|| format!("expected label=weight, got `{part}`"))?;
            let w: f64 = w.trim().parse().map_err(|_| format!("bad weight in `{part}`"))?;
            if !(w >= 0.0 && w.is_finite()) {
                return Err(format!("weight in `{part}` must be non-negative"));
            }
            Ok((label.trim().to_string(), w))
        })
        .collect::<std::result::Result<_, _>>()
        .map(Weights)
}
