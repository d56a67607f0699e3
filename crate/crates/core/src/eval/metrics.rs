use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row and column name for "no crime class".
pub const NONE_LABEL: &str = "none";

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ClassMetrics {
    /// Undefined ratios (no predictions, no gold items) count as zero.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        Self::from_weights(tp as f64, fp as f64, fn_ as f64)
    }

    /// As [`ClassMetrics::from_counts`] for fractional (expected) counts.
    pub fn from_weights(tp: f64, fp: f64, fn_: f64) -> Self {
        let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            precision,
            recall,
            f1,
        }
    }
}

/// `counts[gold][predicted]`, with `none` as both a row and a column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn get(&self, gold: &str, predicted: &str) -> usize {
        let i = self.labels.iter().position(|l| l == gold);
        let j = self.labels.iter().position(|l| l == predicted);
        match (i, j) {
            (Some(i), Some(j)) => self.counts[i][j],
            _ => 0,
        }
    }

    pub fn row_sum(&self, gold: &str) -> usize {
        self.labels
            .iter()
            .position(|l| l == gold)
            .map_or(0, |i| self.counts[i].iter().sum())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_class: BTreeMap<String, ClassMetrics>,
    /// Unweighted mean over crime classes.
    #[serde(rename = "macro")]
    pub macro_avg: ClassMetrics,
    pub confusion_matrix: ConfusionMatrix,
    #[serde(default)]
    pub config_snapshot: serde_json::Value,
}

impl MetricsReport {
    pub fn with_config(mut self, snapshot: serde_json::Value) -> Self {
        self.config_snapshot = snapshot;
        self
    }
}

fn label(l: &Option<String>) -> &str {
    l.as_deref().unwrap_or(NONE_LABEL)
}

/// One-vs-rest precision, recall and F1 per crime class plus their macro
/// average. `None` stands for "no crime class" on either side; it is never
/// a scored class itself, so a `None` prediction is a miss for every crime
/// class. Crime classes are those named in `classes`, or else the union of
/// labels seen.
pub fn precision_recall_f1(
    predictions: &[Option<String>],
    gold: &[Option<String>],
    classes: Option<&[String]>,
) -> Result<MetricsReport> {
    if predictions.len() != gold.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions for {} gold labels",
            predictions.len(),
            gold.len()
        )));
    }
    let classes: Vec<String> = match classes {
        Some(c) => c
            .iter()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
        None => predictions
            .iter()
            .chain(gold)
            .flatten()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
    };
    if classes.iter().any(|c| c == NONE_LABEL) {
        return Err(Error::InvalidArgument(format!("`{NONE_LABEL}` is reserved")));
    }
    let mut labels = classes.clone();
    for l in predictions.iter().chain(gold) {
        let l = label(l);
        if l != NONE_LABEL && !labels.iter().any(|x| x == l) {
            return Err(Error::InvalidArgument(format!("label `{l}` is not a listed class")));
        }
    }
    labels.push(NONE_LABEL.to_string());
    let index = |l: &str| labels.iter().position(|x| x == l).expect("label listed");
    let mut counts = vec![vec![0usize; labels.len()]; labels.len()];
    for (p, g) in predictions.iter().zip(gold) {
        counts[index(label(g))][index(label(p))] += 1;
    }
    let mut per_class = BTreeMap::new();
    for (c, class) in classes.iter().enumerate() {
        let tp = counts[c][c];
        let fp = (0..labels.len()).filter(|&r| r != c).map(|r| counts[r][c]).sum();
        let fn_ = (0..labels.len()).filter(|&k| k != c).map(|k| counts[c][k]).sum();
        per_class.insert(class.clone(), ClassMetrics::from_counts(tp, fp, fn_));
    }
    let n = per_class.len().max(1) as f64;
    let macro_avg = ClassMetrics {
        precision: per_class.values().map(|m| m.precision).sum::<f64>() / n,
        recall: per_class.values().map(|m| m.recall).sum::<f64>() / n,
        f1: per_class.values().map(|m| m.f1).sum::<f64>() / n,
    };
    Ok(MetricsReport {
        per_class,
        macro_avg,
        confusion_matrix: ConfusionMatrix { labels, counts },
        config_snapshot: serde_json::Value::Null,
    })
}

/// Document label by majority over non-`None` sentence labels; ties go to
/// the smallest class id, and an all-`None` list yields `None`.
pub fn classify_document(sentence_labels: &[Option<String>]) -> Option<String> {
    let mut votes: BTreeMap<&str, usize> = BTreeMap::new();
    for l in sentence_labels.iter().flatten() {
        *votes.entry(l.as_str()).or_default() += 1;
    }
    let mut best: Option<(&str, usize)> = None;
    // BTreeMap iterates in id order, so strict `>` keeps the smallest id.
    for (class, n) in votes {
        if best.is_none_or(|(_, m)| n > m) {
            best = Some((class, n));
        }
    }
    best.map(|(c, _)| c.to_string())
}
