//! Browser bindings for three pieces of the pipeline: token noise, the
//! distance band used to flag new words, and taxonomy clustering. Each
//! binding returns JSON so the page stays free of generated glue types.

use c3_core::analysis::{build_taxonomy, estimate_k, fit_outlier_model, BandMode, Tail};
use c3_core::autoencoder::{apply_noise, LatentVector, NoiseSpec};
use c3_core::corpus::{tokenize, Vocabulary, BLANK};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Shown in place of a blanked token.
const BLANK_MARK: &str = "_";

/// Corrupts `text` the way training inputs are corrupted. The vocabulary is
/// the text's own words, so replacements are drawn from them.
pub fn noisy_text(text: &str, spec: &NoiseSpec, seed: u64) -> Result<String, String> {
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return Err("enter at least one word".into());
    }
    let vocab = Vocabulary::from_words(tokens.iter());
    let ids = vocab.encode(&tokens);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noisy = apply_noise(&ids, spec, vocab.len(), &mut rng);
    let words: Vec<&str> = noisy
        .iter()
        .map(|&id| if id == BLANK { BLANK_MARK } else { vocab.token(id).unwrap_or("?") })
        .collect();
    Ok(words.join(" "))
}

#[derive(Debug, Serialize)]
pub struct Band {
    pub center: [f64; 2],
    pub lower: f64,
    pub upper: f64,
    /// One entry per candidate: `lower`, `upper` or null.
    pub flags: Vec<Option<Tail>>,
}

fn to_vectors(xy: &[f64]) -> Result<Vec<LatentVector>, String> {
    if xy.len() % 2 != 0 {
        return Err("coordinates must come in x, y pairs".into());
    }
    Ok(xy.chunks(2).map(|p| LatentVector(p.to_vec())).collect())
}

/// Fits the band on `known` points and flags each candidate outside it.
/// Points are flattened `x, y` pairs.
pub fn distance_band(known: &[f64], candidates: &[f64], alpha: f64, mean_ci: bool) -> Result<Band, String> {
    let mode = if mean_ci { BandMode::MeanCi } else { BandMode::Individual };
    let model = fit_outlier_model(&to_vectors(known)?, alpha, mode).map_err(|e| e.to_string())?;
    let flags = to_vectors(candidates)?
        .iter()
        .map(|v| model.statistic(v).map(|s| model.tail(s)))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    Ok(Band {
        center: [model.center.0[0], model.center.0[1]],
        lower: model.lower,
        upper: model.upper,
        flags,
    })
}

#[derive(Debug, Serialize)]
pub struct Clusters {
    pub k: usize,
    /// Cluster index of each input point.
    pub assignments: Vec<usize>,
    /// Index of the point nearest each centroid.
    pub representatives: Vec<usize>,
    pub centroids: Vec<[f64; 2]>,
}

/// Clusters points with k chosen by silhouette over `2..=min(8, n - 1)`.
pub fn cluster_points(xy: &[f64], seed: u64) -> Result<Clusters, String> {
    let vectors = to_vectors(xy)?;
    if vectors.len() < 3 {
        return Err("place at least 3 points".into());
    }
    let hi = 8.min(vectors.len() - 1);
    let k = estimate_k(&vectors, (2, hi), seed).map_err(|e| e.to_string())?;
    let named: Vec<(String, LatentVector)> =
        vectors.iter().enumerate().map(|(i, v)| (i.to_string(), v.clone())).collect();
    let taxonomy = build_taxonomy(&named, k, None, seed).map_err(|e| e.to_string())?;
    let index = |w: &str| w.parse::<usize>().expect("names are indices");
    let mut assignments = vec![0; vectors.len()];
    for (c, cluster) in taxonomy.clusters.iter().enumerate() {
        for m in &cluster.members {
            assignments[index(m)] = c;
        }
    }
    Ok(Clusters {
        k,
        assignments,
        representatives: taxonomy.clusters.iter().map(|c| index(&c.category_word)).collect(),
        centroids: taxonomy.clusters.iter().map(|c| [c.centroid.0[0], c.centroid.0[1]]).collect(),
    })
}

fn json<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn noise(
    text: &str,
    shuffle_window: usize,
    delete_prob: f64,
    blank_prob: f64,
    replace_prob: f64,
    seed: u64,
) -> Result<String, JsError> {
    let spec = NoiseSpec {
        shuffle_window,
        delete_prob,
        blank_prob,
        replace_prob,
    };
    noisy_text(text, &spec, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn band(known: &[f64], candidates: &[f64], alpha: f64, mean_ci: bool) -> Result<String, JsError> {
    json(distance_band(known, candidates, alpha, mean_ci))
}

#[wasm_bindgen]
pub fn clusters(xy: &[f64], seed: u64) -> Result<String, JsError> {
    json(cluster_points(xy, seed))
}
