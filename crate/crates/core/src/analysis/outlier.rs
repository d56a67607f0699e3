use serde::{Deserialize, Serialize};

use super::stats::{confidence_interval, mean_std, z_critical};
use crate::autoencoder::LatentVector;
use crate::detector::mean_vector;
use crate::error::{Error, Result};

/// Euclidean distance of each vector from `center`.
pub fn scalarize(vectors: &[LatentVector], center: &LatentVector) -> Result<Vec<f64>> {
    vectors
        .iter()
        .map(|v| euclidean(v.as_slice(), center.as_slice()))
        .collect()
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!(
            "vectors of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandMode {
    /// `mu -/+ z * sigma`: a band containing individual points.
    #[default]
    Individual,
    /// `mu -/+ z * sigma / sqrt(n)`: the interval for the mean.
    MeanCi,
}

impl std::str::FromStr for BandMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "individual" => Ok(BandMode::Individual),
            "mean_ci" | "mean-ci" => Ok(BandMode::MeanCi),
            other => Err(Error::InvalidArgument(format!("unknown band mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierModel {
    /// Reference point distances are measured from.
    pub center: LatentVector,
    pub mu: f64,
    pub sigma: f64,
    pub n: usize,
    pub alpha: f64,
    pub lower: f64,
    pub upper: f64,
    pub band_mode: BandMode,
}

impl OutlierModel {
    pub fn statistic(&self, v: &LatentVector) -> Result<f64> {
        euclidean(v.as_slice(), self.center.as_slice())
    }

    pub fn tail(&self, statistic: f64) -> Option<Tail> {
        if statistic < self.lower {
            Some(Tail::Lower)
        } else if statistic > self.upper {
            Some(Tail::Upper)
        } else {
            None
        }
    }
}

/// Fits a band on distances from the mean of `class_vectors`.
pub fn fit_outlier_model(
    class_vectors: &[LatentVector],
    alpha: f64,
    band_mode: BandMode,
) -> Result<OutlierModel> {
    if class_vectors.len() < 3 {
        return Err(Error::InsufficientCorpus(format!(
            "outlier model needs at least 3 vectors, got {}",
            class_vectors.len()
        )));
    }
    let center = mean_vector(class_vectors)?;
    let d = scalarize(class_vectors, &center)?;
    let (mu, sigma) = mean_std(&d);
    if !(sigma > 1e-12 * mu.abs().max(1.0)) {
        return Err(Error::DegenerateCluster);
    }
    let n = d.len();
    let (lower, upper) = match band_mode {
        BandMode::Individual => {
            let z = z_critical(alpha)?;
            (mu - z * sigma, mu + z * sigma)
        }
        BandMode::MeanCi => confidence_interval(mu, sigma, n, alpha)?,
    };
    Ok(OutlierModel {
        center,
        mu,
        sigma,
        n,
        alpha,
        lower,
        upper,
        band_mode,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tail {
    /// Unusually close to the center.
    Lower,
    /// Far from the center: the new-word candidates.
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewWordFlag {
    pub word: String,
    pub statistic: f64,
    pub tail: Tail,
}

/// Words whose distance from the model center falls outside the band, in
/// input order.
pub fn detect_new_words(
    words_with_vectors: &[(String, LatentVector)],
    model: &OutlierModel,
) -> Result<Vec<NewWordFlag>> {
    let mut out = Vec::new();
    for (word, v) in words_with_vectors {
        let statistic = model.statistic(v)?;
        if let Some(tail) = model.tail(statistic) {
            out.push(NewWordFlag {
                word: word.clone(),
                statistic,
                tail,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn lv(v: &[f64]) -> LatentVector {
        LatentVector(v.to_vec())
    }

    /// Points on a circle around the origin at the given radii.
    fn ring(radii: &[f64]) -> Vec<LatentVector> {
        let n = radii.len() as f64;
        radii
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let a = std::f64::consts::TAU * i as f64 / n;
                lv(&[r * a.cos(), r * a.sin()])
            })
            .collect()
    }

    #[test]
    fn scalarize_examples() {
        let c = lv(&[0.0, 0.0]);
        assert_eq!(scalarize(&[lv(&[3.0, 4.0]), c.clone()], &c).unwrap(), vec![5.0, 0.0]);
    }

    #[test]
    fn equal_distances_are_degenerate() {
        let square = [lv(&[1.0, 0.0]), lv(&[0.0, 1.0]), lv(&[-1.0, 0.0]), lv(&[0.0, -1.0])];
        assert!(matches!(
            fit_outlier_model(&square, 0.05, BandMode::Individual),
            Err(Error::DegenerateCluster)
        ));
        assert!(fit_outlier_model(&square[..2], 0.05, BandMode::Individual).is_err());
    }

    #[test]
    fn individual_band_is_mu_plus_minus_z_sigma() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let normal = Normal::new(1.0, 0.1).unwrap();
        let radii: Vec<f64> = (0..4000).map(|_| normal.sample(&mut rng)).collect();
        let m = fit_outlier_model(&ring(&radii), 0.05, BandMode::Individual).unwrap();
        assert!((m.lower - 0.804).abs() < 0.02, "{m:?}");
        assert!((m.upper - 1.196).abs() < 0.02, "{m:?}");
    }

    #[test]
    fn mean_band_is_sqrt_n_narrower() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let radii: Vec<f64> = (0..100).map(|_| 1.0 + rng.random::<f64>()).collect();
        let pts = ring(&radii);
        let a = fit_outlier_model(&pts, 0.05, BandMode::Individual).unwrap();
        let b = fit_outlier_model(&pts, 0.05, BandMode::MeanCi).unwrap();
        let ratio = (a.upper - a.lower) / (b.upper - b.lower);
        assert!((ratio - 10.0).abs() < 1e-9);
    }

    #[test]
    fn planted_far_word_is_the_only_flag() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut radii: Vec<f64> = (0..99).map(|_| 1.0 + 0.01 * (rng.random::<f64>() - 0.5)).collect();
        radii.push(10.0);
        let pts = ring(&radii);
        let m = fit_outlier_model(&pts, 0.05, BandMode::Individual).unwrap();
        let words: Vec<(String, LatentVector)> =
            pts.iter().enumerate().map(|(i, v)| (format!("w{i}"), v.clone())).collect();
        let flags = detect_new_words(&words, &m).unwrap();
        assert_eq!(flags.len(), 1);
        assert_eq!(flags[0].word, "w99");
        assert_eq!(flags[0].tail, Tail::Upper);
        let inside: Vec<(String, LatentVector)> = words[..5].to_vec();
        assert!(detect_new_words(&inside, &m).unwrap().is_empty());
    }

    proptest! {
        #[test]
        fn distances_nonnegative(v in prop::collection::vec(-1e3f64..1e3, 1..8)) {
            let c = lv(&vec![0.5; v.len()]);
            prop_assert!(scalarize(&[lv(&v)], &c).unwrap()[0] >= 0.0);
        }

        #[test]
        fn flags_match_brute_force(
            pts in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 4..40),
            probes in prop::collection::vec(prop::collection::vec(-20.0f64..20.0, 3), 0..40),
            alpha in 0.01f64..0.5,
        ) {
            let vs: Vec<LatentVector> = pts.iter().map(|p| lv(p)).collect();
            let Ok(m) = fit_outlier_model(&vs, alpha, BandMode::Individual) else { return Ok(()) };
            let words: Vec<(String, LatentVector)> =
                probes.iter().enumerate().map(|(i, p)| (i.to_string(), lv(p))).collect();
            let got: Vec<String> = detect_new_words(&words, &m).unwrap().into_iter().map(|f| f.word).collect();
            let brute: Vec<String> = words
                .iter()
                .filter(|(_, v)| {
                    let d = v.0.iter().zip(&m.center.0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                    d < m.lower || d > m.upper
                })
                .map(|(w, _)| w.clone())
                .collect();
            prop_assert_eq!(got, brute);
        }
    }
}
