use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::autoencoder::LatentVector;
use crate::error::{Error, Result};

/// Below this many points the projection uses principal components.
pub const TSNE_MIN_POINTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionMethod {
    Tsne,
    Pca,
}

pub fn projection_method(n: usize) -> ProjectionMethod {
    if n < TSNE_MIN_POINTS {
        ProjectionMethod::Pca
    } else {
        ProjectionMethod::Tsne
    }
}

/// Projects vectors to the plane: exact t-SNE with perplexity
/// `min(30, n / 4)`, or the top two principal components for small inputs.
/// Deterministic per seed.
pub fn project_2d(vectors: &[LatentVector], seed: u64) -> Result<Vec<[f64; 2]>> {
    if vectors.len() < 2 {
        return Err(Error::InvalidArgument("projection needs at least 2 vectors".into()));
    }
    let dim = vectors[0].dim();
    if vectors.iter().any(|v| v.dim() != dim) {
        return Err(Error::ShapeMismatch("vectors of unequal dimension".into()));
    }
    let points: Vec<&[f64]> = vectors.iter().map(LatentVector::as_slice).collect();
    Ok(match projection_method(points.len()) {
        ProjectionMethod::Pca => pca_2d(&points),
        ProjectionMethod::Tsne => {
            let perplexity = (points.len() as f64 / 4.0).min(30.0);
            tsne(&points, perplexity, seed)
        }
    })
}

fn centered(points: &[&[f64]]) -> Vec<Vec<f64>> {
    let n = points.len() as f64;
    let dim = points[0].len();
    let mean: Vec<f64> = (0..dim)
        .map(|d| points.iter().map(|p| p[d]).sum::<f64>() / n)
        .collect();
    points
        .iter()
        .map(|p| p.iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect()
}

/// Top two principal components by power iteration with deflation on the
/// covariance matrix. Component signs are fixed so the largest-magnitude
/// loading is positive.
pub fn pca_2d(points: &[&[f64]]) -> Vec<[f64; 2]> {
    let x = centered(points);
    let dim = x[0].len();
    let mut cov = vec![vec![0.0; dim]; dim];
    for row in &x {
        for i in 0..dim {
            for j in 0..dim {
                cov[i][j] += row[i] * row[j];
            }
        }
    }
    let trace: f64 = (0..dim).map(|i| cov[i][i]).sum();
    let mut components: Vec<Vec<f64>> = Vec::new();
    for c in 0..2 {
        let start: Vec<f64> = (0..dim).map(|i| 1.0 + (i + c) as f64 * 0.01).collect();
        let mut v = orthonormalize(start, &components);
        for _ in 0..500 {
            let w: Vec<f64> = (0..dim)
                .map(|i| (0..dim).map(|j| cov[i][j] * v[j]).sum())
                .collect();
            let w = orthonormalize_raw(w, &components);
            // Remaining variance is rounding noise: any orthogonal direction will do.
            if w.1 <= 1e-12 * trace.max(1e-300) {
                break;
            }
            v = w.0;
        }
        let lead = v
            .iter()
            .copied()
            .fold(0.0f64, |m, a| if a.abs() > m.abs() { a } else { m });
        if lead < 0.0 {
            v.iter_mut().for_each(|a| *a = -*a);
        }
        components.push(v);
    }
    x.iter()
        .map(|row| {
            let p = |c: &Vec<f64>| row.iter().zip(c).map(|(a, b)| a * b).sum::<f64>();
            [p(&components[0]), p(&components[1])]
        })
        .collect()
}

/// Removes the projections on `basis` and returns the unit vector and the
/// norm before scaling.
fn orthonormalize_raw(mut v: Vec<f64>, basis: &[Vec<f64>]) -> (Vec<f64>, f64) {
    for b in basis {
        let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
        v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    (v, norm)
}

fn orthonormalize(v: Vec<f64>, basis: &[Vec<f64>]) -> Vec<f64> {
    let dim = v.len();
    let (u, norm) = orthonormalize_raw(v, basis);
    if norm > 1e-9 {
        return u;
    }
    (0..dim)
        .map(|i| orthonormalize_raw((0..dim).map(|j| f64::from(u8::from(i == j))).collect(), basis))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(u, _)| u)
        .unwrap_or(u)
}

fn sq_dists(points: &[&[f64]]) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v: f64 = points[i]
                .iter()
                .zip(points[j])
                .map(|(a, b)| (a - b).powi(2))
                .sum();
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    d
}

/// Symmetrised input affinities with per-point bandwidths found by
/// bisection on the target perplexity.
fn affinities(points: &[&[f64]], perplexity: f64) -> Vec<Vec<f64>> {
    let n = points.len();
    let d = sq_dists(points);
    let target = perplexity.ln();
    let mut p = vec![vec![0.0; n]; n];
    for i in 0..n {
        let (mut lo, mut hi, mut beta) = (0.0f64, f64::INFINITY, 1.0f64);
        for _ in 0..100 {
            let mut sum = 0.0;
            let mut weighted = 0.0;
            for j in 0..n {
                if j != i {
                    let w = (-beta * d[i][j]).exp();
                    p[i][j] = w;
                    sum += w;
                    weighted += w * d[i][j];
                }
            }
            if sum <= 0.0 {
                hi = beta;
                beta = (lo + hi) / 2.0;
                continue;
            }
            let entropy = sum.ln() + beta * weighted / sum;
            for j in 0..n {
                p[i][j] /= sum;
            }
            if (entropy - target).abs() < 1e-5 {
                break;
            }
            if entropy > target {
                lo = beta;
                beta = if hi.is_finite() { (lo + hi) / 2.0 } else { beta * 2.0 };
            } else {
                hi = beta;
                beta = (lo + hi) / 2.0;
            }
        }
    }
    let mut sym = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            sym[i][j] = ((p[i][j] + p[j][i]) / (2.0 * n as f64)).max(1e-12);
        }
    }
    sym
}

fn tsne(points: &[&[f64]], perplexity: f64, seed: u64) -> Vec<[f64; 2]> {
    const ITERS: usize = 750;
    const EXAGGERATION_ITERS: usize = 100;
    const LEARNING_RATE: f64 = 100.0;
    let n = points.len();
    let p = affinities(points, perplexity);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1e-4).expect("valid normal");
    let mut y: Vec<[f64; 2]> = (0..n)
        .map(|_| [normal.sample(&mut rng), normal.sample(&mut rng)])
        .collect();
    let mut velocity = vec![[0.0; 2]; n];
    let mut gains = vec![[1.0; 2]; n];
    let mut q = vec![vec![0.0; n]; n];
    for iter in 0..ITERS {
        let exaggeration = if iter < EXAGGERATION_ITERS { 12.0 } else { 1.0 };
        let momentum = if iter < 250 { 0.5 } else { 0.8 };
        let mut z = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let dx = y[i][0] - y[j][0];
                let dy = y[i][1] - y[j][1];
                let w = 1.0 / (1.0 + dx * dx + dy * dy);
                q[i][j] = w;
                q[j][i] = w;
                z += 2.0 * w;
            }
        }
        for i in 0..n {
            let mut grad = [0.0; 2];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let w = q[i][j];
                let m = 4.0 * (exaggeration * p[i][j] - w / z) * w;
                grad[0] += m * (y[i][0] - y[j][0]);
                grad[1] += m * (y[i][1] - y[j][1]);
            }
            for d in 0..2 {
                let same_sign = (grad[d] > 0.0) == (velocity[i][d] > 0.0);
                gains[i][d] = if same_sign {
                    (gains[i][d] * 0.8f64).max(0.01)
                } else {
                    gains[i][d] + 0.2
                };
                velocity[i][d] = momentum * velocity[i][d] - LEARNING_RATE * gains[i][d] * grad[d];
            }
        }
        for i in 0..n {
            y[i][0] += velocity[i][0];
            y[i][1] += velocity[i][1];
        }
        let cx = y.iter().map(|p| p[0]).sum::<f64>() / n as f64;
        let cy = y.iter().map(|p| p[1]).sum::<f64>() / n as f64;
        for p in &mut y {
            p[0] -= cx;
            p[1] -= cy;
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::cluster::silhouette;
    use rand_distr::Normal;

    fn blobs(n_per: usize, dim: usize, sep: f64, seed: u64) -> (Vec<LatentVector>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut vs = Vec::new();
        let mut labels = Vec::new();
        for c in 0..2 {
            for _ in 0..n_per {
                let v: Vec<f64> = (0..dim)
                    .map(|d| noise.sample(&mut rng) + if d == 0 { sep * c as f64 } else { 0.0 })
                    .collect();
                vs.push(LatentVector(v));
                labels.push(c);
            }
        }
        (vs, labels)
    }

    #[test]
    fn shape_and_method_rule() {
        let (vs, _) = blobs(15, 5, 10.0, 1);
        assert_eq!(project_2d(&vs, 0).unwrap().len(), 30);
        assert_eq!(projection_method(5), ProjectionMethod::Pca);
        assert_eq!(projection_method(30), ProjectionMethod::Tsne);
        assert!(project_2d(&vs[..1], 0).is_err());
    }

    #[test]
    fn small_inputs_use_principal_components() {
        let vs: Vec<LatentVector> = (0..5)
            .map(|i| LatentVector(vec![i as f64, 2.0 * i as f64, 0.0]))
            .collect();
        let p = project_2d(&vs, 0).unwrap();
        // Collinear input: all variance on the first component.
        assert!(p.iter().all(|q| q[1].abs() < 1e-6));
        let spread = p[4][0] - p[0][0];
        assert!((spread.abs() - 4.0 * 5f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn separated_blobs_stay_separated() {
        let (vs, labels) = blobs(20, 8, 25.0, 3);
        let p = project_2d(&vs, 5).unwrap();
        let pts: Vec<Vec<f64>> = p.iter().map(|q| q.to_vec()).collect();
        assert!(silhouette(&pts, &labels).unwrap() > 0.5);
        assert_eq!(p, project_2d(&vs, 5).unwrap());
    }
}
