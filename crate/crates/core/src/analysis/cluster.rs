use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autoencoder::LatentVector;
use crate::error::{Error, Result};

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn check_dims(points: &[Vec<f64>]) -> Result<usize> {
    let dim = points.first().map(Vec::len).unwrap_or(0);
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::ShapeMismatch("points of unequal dimension".into()));
    }
    Ok(dim)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    /// Sum of squared distances to assigned centroids.
    pub inertia: f64,
    /// Objective after each assignment step; non-increasing.
    pub inertia_history: Vec<f64>,
}

/// k-means++ seeding: first center uniform, then proportional to squared
/// distance from the nearest chosen center.
fn plus_plus(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centers = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if r < w {
                    chosen = i;
                    break;
                }
                r -= w;
            }
            chosen
        } else {
            rng.random_range(0..points.len())
        };
        centers.push(points[idx].clone());
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, centers.last().expect("just pushed")));
        }
    }
    centers
}

fn nearest(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn lloyd(points: &[Vec<f64>], mut centers: Vec<Vec<f64>>, max_iter: usize) -> KMeansResult {
    let k = centers.len();
    let dim = points[0].len();
    let mut assignments = vec![usize::MAX; points.len()];
    let mut history = Vec::new();
    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        let mut inertia = 0.0;
        for (a, p) in assignments.iter_mut().zip(points) {
            let (j, d) = nearest(p, &centers);
            inertia += d;
            if *a != j {
                *a = j;
                changed = true;
            }
        }
        history.push(inertia);
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (&a, p) in assignments.iter().zip(points) {
            counts[a] += 1;
            for (s, x) in sums[a].iter_mut().zip(p) {
                *s += x;
            }
        }
        for j in 0..k {
            // An emptied cluster keeps its previous center.
            if counts[j] > 0 {
                centers[j] = sums[j].iter().map(|s| s / counts[j] as f64).collect();
            }
        }
    }
    let inertia = *history.last().expect("at least one iteration");
    KMeansResult {
        centroids: centers,
        assignments,
        inertia,
        inertia_history: history,
    }
}

/// Lloyd's algorithm from a k-means++ seeding; the best of `restarts` runs
/// by final inertia (earliest run on ties).
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, restarts: usize) -> Result<KMeansResult> {
    check_dims(points)?;
    if k == 0 || k > points.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must lie in 1..={}",
            points.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansResult> = None;
    for _ in 0..restarts.max(1) {
        let centers = plus_plus(points, k, &mut rng);
        let run = lloyd(points, centers, 300);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Mean silhouette coefficient. Points in singleton clusters score 0.
pub fn silhouette(points: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    check_dims(points)?;
    if points.len() != labels.len() || points.is_empty() {
        return Err(Error::ShapeMismatch("one label per point required".into()));
    }
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    let mut total = 0.0;
    for (i, p) in points.iter().enumerate() {
        if sizes[labels[i]] <= 1 {
            continue;
        }
        let mut sums = vec![0.0; k];
        for (j, q) in points.iter().enumerate() {
            if i != j {
                sums[labels[j]] += sq_dist(p, q).sqrt();
            }
        }
        let a = sums[labels[i]] / (sizes[labels[i]] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != labels[i] && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        if b.is_finite() {
            let m = a.max(b);
            if m > 0.0 {
                total += (b - a) / m;
            }
        }
    }
    Ok(total / points.len() as f64)
}

pub const DEFAULT_K_RANGE: (usize, usize) = (2, 12);
const RESTARTS: usize = 10;

/// The k in `k_range` whose best-of-ten k-means++ clustering has the highest
/// mean silhouette (smallest k on ties).
pub fn estimate_k(vectors: &[LatentVector], k_range: (usize, usize), seed: u64) -> Result<usize> {
    let (lo, hi) = k_range;
    if lo < 2 || lo > hi {
        return Err(Error::InvalidArgument(format!("invalid k range {lo}..={hi}")));
    }
    if vectors.len() < hi + 1 {
        return Err(Error::InsufficientCorpus(format!(
            "estimating k up to {hi} needs at least {} vectors, got {}",
            hi + 1,
            vectors.len()
        )));
    }
    let points: Vec<Vec<f64>> = vectors.iter().map(|v| v.0.clone()).collect();
    let mut best = (lo, f64::NEG_INFINITY);
    for k in lo..=hi {
        let run = kmeans(&points, k, seed.wrapping_add(k as u64), RESTARTS)?;
        let s = silhouette(&points, &run.assignments)?;
        if s > best.1 {
            best = (k, s);
        }
    }
    Ok(best.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaxonomyCluster {
    pub centroid: LatentVector,
    /// Member nearest the centroid.
    pub category_word: String,
    /// Up to four next-nearest members within epsilon of the centroid.
    pub subcategory_words: Vec<String>,
    /// All members, nearest first.
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Taxonomy {
    pub k: usize,
    pub epsilon: f64,
    pub clusters: Vec<TaxonomyCluster>,
}

pub const MAX_SUBCATEGORIES: usize = 4;

/// Clusters words by their vectors. `epsilon = None` uses the median
/// member-to-centroid distance. Clusters are ordered by category word.
pub fn build_taxonomy(
    words_with_vectors: &[(String, LatentVector)],
    k: usize,
    epsilon: Option<f64>,
    seed: u64,
) -> Result<Taxonomy> {
    if k == 0 || k > words_with_vectors.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must lie in 1..={}",
            words_with_vectors.len()
        )));
    }
    let points: Vec<Vec<f64>> = words_with_vectors.iter().map(|(_, v)| v.0.clone()).collect();
    let run = kmeans(&points, k, seed, RESTARTS)?;
    let dist = |i: usize| sq_dist(&points[i], &run.centroids[run.assignments[i]]).sqrt();
    let epsilon = match epsilon {
        Some(e) => e,
        None => {
            let mut all: Vec<f64> = (0..points.len()).map(dist).collect();
            all.sort_by(f64::total_cmp);
            let m = all.len();
            if m % 2 == 1 {
                all[m / 2]
            } else {
                (all[m / 2 - 1] + all[m / 2]) / 2.0
            }
        }
    };
    let mut clusters = Vec::new();
    for (c, centroid) in run.centroids.iter().enumerate() {
        let mut members: Vec<(f64, &str)> = (0..points.len())
            .filter(|&i| run.assignments[i] == c)
            .map(|i| (dist(i), words_with_vectors[i].0.as_str()))
            .collect();
        if members.is_empty() {
            continue;
        }
        members.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
        clusters.push(TaxonomyCluster {
            centroid: LatentVector(centroid.clone()),
            category_word: members[0].1.to_string(),
            subcategory_words: members[1..]
                .iter()
                .filter(|(d, _)| *d <= epsilon)
                .take(MAX_SUBCATEGORIES)
                .map(|(_, w)| w.to_string())
                .collect(),
            members: members.iter().map(|(_, w)| w.to_string()).collect(),
        });
    }
    clusters.sort_by(|a, b| a.category_word.cmp(&b.category_word));
    Ok(Taxonomy {
        k,
        epsilon,
        clusters,
    })
}
