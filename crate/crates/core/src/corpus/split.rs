use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Document;
use crate::error::{Error, Result};

const MIN_DOCS_PER_CLASS: usize = 10;

#[derive(Debug, Clone, Default)]
pub struct CorpusSplit {
    pub train: Vec<Document>,
    pub validation: Vec<Document>,
    pub test: Vec<Document>,
    /// Carved out of the training share; used only to build class profiles.
    pub profile: Vec<Document>,
    pub seed: u64,
}

fn group_by_label(docs: &[Document]) -> BTreeMap<&str, Vec<&Document>> {
    let mut groups: BTreeMap<&str, Vec<&Document>> = BTreeMap::new();
    for d in docs {
        groups.entry(d.label.as_str()).or_default().push(d);
    }
    groups
}

/// Stratified train/validation/test split with a profile subset carved from
/// the training share. Deterministic per seed.
pub fn split_corpus(
    docs: &[Document],
    ratios: (f64, f64, f64),
    profile_fraction: f64,
    seed: u64,
) -> Result<CorpusSplit> {
    let (r_train, r_val, r_test) = ratios;
    if [r_train, r_val, r_test].iter().any(|r| !(0.0..=1.0).contains(r))
        || (r_train + r_val + r_test - 1.0).abs() > 1e-9
    {
        return Err(Error::InvalidArgument(format!(
            "split ratios must be non-negative and sum to 1, got {r_train}:{r_val}:{r_test}"
        )));
    }
    if !(0.0..1.0).contains(&profile_fraction) {
        return Err(Error::InvalidArgument(format!(
            "profile fraction must lie in [0, 1), got {profile_fraction}"
        )));
    }
    let groups = group_by_label(docs);
    if groups.is_empty() {
        return Err(Error::InsufficientCorpus("no documents".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = CorpusSplit {
        seed,
        ..Default::default()
    };
    for (label, mut members) in groups {
        if members.len() < MIN_DOCS_PER_CLASS {
            return Err(Error::InsufficientCorpus(format!(
                "class `{label}` has {} documents, at least {MIN_DOCS_PER_CLASS} required",
                members.len()
            )));
        }
        // Sort by id first so the result does not depend on input order.
        members.sort_by(|a, b| a.id.cmp(&b.id));
        members.shuffle(&mut rng);
        let n = members.len();
        let n_train = ((n as f64) * r_train).round() as usize;
        let n_val = (((n as f64) * r_val).round() as usize).min(n - n_train);
        let n_profile = ((n_train as f64) * profile_fraction).round() as usize;
        for (i, doc) in members.into_iter().enumerate() {
            let bucket = if i < n_profile {
                &mut split.profile
            } else if i < n_train {
                &mut split.train
            } else if i < n_train + n_val {
                &mut split.validation
            } else {
                &mut split.test
            };
            bucket.push(doc.clone());
        }
    }
    Ok(split)
}

/// Proportions of a test mixture and its total size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixSpec {
    pub name: String,
    /// (label, proportion); labels are crime class ids or `general`.
    pub parts: Vec<(String, f64)>,
    pub total_size: usize,
}

impl MixSpec {
    pub fn new(name: impl Into<String>, parts: &[(&str, f64)], total_size: usize) -> Result<Self> {
        let spec = Self {
            name: name.into(),
            parts: parts.iter().map(|(l, p)| (l.to_string(), *p)).collect(),
            total_size,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Builds a mix from unnormalised weights such as `6:2:2` or
    /// `99.99:0.005:0.005`.
    pub fn from_weights(
        name: impl Into<String>,
        labels: &[&str],
        weights: &[f64],
        total_size: usize,
    ) -> Result<Self> {
        if labels.len() != weights.len() || labels.is_empty() {
            return Err(Error::InvalidArgument(
                "mix labels and weights must be non-empty and of equal length".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::InvalidArgument("mix weights must be positive".into()));
        }
        let parts: Vec<(&str, f64)> = labels
            .iter()
            .zip(weights)
            .map(|(l, w)| (*l, w / sum))
            .collect();
        Self::new(name, &parts, total_size)
    }

    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.parts.iter().map(|(_, p)| p).sum();
        if self.parts.is_empty()
            || self.parts.iter().any(|(_, p)| !(0.0..=1.0).contains(p))
            || (sum - 1.0).abs() > 1e-9
        {
            return Err(Error::InvalidArgument(format!(
                "mix `{}` proportions must sum to 1, got {sum}",
                self.name
            )));
        }
        Ok(())
    }
}

/// Per-part document counts by the largest-remainder rule; each count is
/// within one document of `proportion * total`.
pub fn mix_counts(spec: &MixSpec) -> Vec<usize> {
    let exact: Vec<f64> = spec
        .parts
        .iter()
        .map(|(_, p)| p * spec.total_size as f64)
        .collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().take(spec.total_size.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Draws a shuffled test mixture from per-label document pools.
pub fn mix_test_set(
    sources: &BTreeMap<String, Vec<Document>>,
    spec: &MixSpec,
    seed: u64,
) -> Result<Vec<Document>> {
    spec.validate()?;
    let counts = mix_counts(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(spec.total_size);
    for ((label, _), &count) in spec.parts.iter().zip(&counts) {
        let pool = sources.get(label).map(Vec::as_slice).unwrap_or(&[]);
        if pool.len() < count {
            return Err(Error::InsufficientSource {
                class: label.clone(),
                needed: count,
                available: pool.len(),
            });
        }
        let mut idx: Vec<usize> = (0..pool.len()).collect();
        idx.shuffle(&mut rng);
        out.extend(idx[..count].iter().map(|&i| pool[i].clone()));
    }
    out.shuffle(&mut rng);
    Ok(out)
}
