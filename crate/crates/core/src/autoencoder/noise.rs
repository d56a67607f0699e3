//! Token-level corruption for the denoising variants.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::BLANK;

/// Corruption settings. Applied in the order shuffle, delete, blank, replace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    /// Maximum distance a token may move during the local shuffle.
    pub shuffle_window: usize,
    pub delete_prob: f64,
    pub blank_prob: f64,
    pub replace_prob: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            shuffle_window: 3,
            delete_prob: 0.1,
            blank_prob: 0.1,
            replace_prob: 0.1,
        }
    }
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self {
            shuffle_window: 0,
            delete_prob: 0.0,
            blank_prob: 0.0,
            replace_prob: 0.0,
        }
    }

    pub fn is_valid(&self) -> bool {
        [self.delete_prob, self.blank_prob, self.replace_prob]
            .iter()
            .all(|p| (0.0..=1.0).contains(p))
    }
}

/// Corrupts `tokens`. Replacement draws uniformly from the non-reserved ids
/// `3..vocab_size`. A fully deleted sequence becomes `[BLANK]`.
pub fn apply_noise<R: Rng + ?Sized>(
    tokens: &[usize],
    spec: &NoiseSpec,
    vocab_size: usize,
    rng: &mut R,
) -> Vec<usize> {
    // Local shuffle: sort by position plus uniform jitter in [0, k + 1),
    // which moves no token further than k places.
    let mut keyed: Vec<(f64, usize)> = tokens
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let jitter = if spec.shuffle_window > 0 {
                rng.random::<f64>() * (spec.shuffle_window as f64 + 1.0)
            } else {
                0.0
            };
            (i as f64 + jitter, t)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut out: Vec<usize> = keyed
        .into_iter()
        .map(|(_, t)| t)
        .filter(|_| !(spec.delete_prob > 0.0 && rng.random_bool(spec.delete_prob)))
        .collect();

    if spec.blank_prob > 0.0 {
        for t in out.iter_mut() {
            if rng.random_bool(spec.blank_prob) {
                *t = BLANK;
            }
        }
    }
    if spec.replace_prob > 0.0 && vocab_size > BLANK + 1 {
        for t in out.iter_mut() {
            if rng.random_bool(spec.replace_prob) {
                *t = rng.random_range(BLANK + 1..vocab_size);
            }
        }
    }
    if out.is_empty() {
        out.push(BLANK);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_spec_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let seq = vec![5, 9, 3, 3, 7];
        assert_eq!(apply_noise(&seq, &NoiseSpec::none(), 20, &mut rng), seq);
    }

    #[test]
    fn full_deletion_falls_back_to_blank() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let spec = NoiseSpec {
            delete_prob: 1.0,
            ..NoiseSpec::none()
        };
        assert_eq!(apply_noise(&[4, 5, 6], &spec, 20, &mut rng), vec![BLANK]);
    }

    #[test]
    fn replacement_stays_in_vocab() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let spec = NoiseSpec {
            replace_prob: 1.0,
            ..NoiseSpec::none()
        };
        let out = apply_noise(&[3; 50], &spec, 10, &mut rng);
        assert!(out.iter().all(|&t| (3..10).contains(&t)));
    }

    #[test]
    fn deterministic_per_seed() {
        let seq: Vec<usize> = (3..40).collect();
        let spec = NoiseSpec::default();
        let a = apply_noise(&seq, &spec, 50, &mut ChaCha8Rng::seed_from_u64(4));
        let b = apply_noise(&seq, &spec, 50, &mut ChaCha8Rng::seed_from_u64(4));
        assert_eq!(a, b);
    }
}
