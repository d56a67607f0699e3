use std::collections::BTreeMap;

use crate::autoencoder::{AutoEncoderModel, LatentVector};
use crate::corpus::Document;
use crate::error::Result;

/// A word's contextual vector: the mean latent vector of the sentences it
/// occurs in. Words that never occur in `docs` are omitted; the rest keep
/// the input order. Returns each word's sentence count alongside.
pub fn contextual_word_vectors<S: AsRef<str>>(
    model: &AutoEncoderModel,
    docs: &[Document],
    words: &[S],
) -> Result<Vec<(String, LatentVector, usize)>> {
    let wanted: BTreeMap<&str, usize> = words
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_ref(), i))
        .collect();
    let mut seqs = Vec::new();
    let mut hits: Vec<Vec<usize>> = Vec::new();
    for s in docs.iter().flat_map(|d| &d.sentences) {
        let mut found: Vec<usize> = s.tokens.iter().filter_map(|t| wanted.get(t.as_str()).copied()).collect();
        if found.is_empty() {
            continue;
        }
        found.sort_unstable();
        found.dedup();
        seqs.push(model.vocab().encode(&s.tokens));
        hits.push(found);
    }
    let dim = model.latent_dim();
    let mut sums = vec![(vec![0.0; dim], 0usize); words.len()];
    if !seqs.is_empty() {
        let vectors = model.encode_batch(&seqs)?;
        for (v, found) in vectors.iter().zip(&hits) {
            for &i in found {
                let (sum, n) = &mut sums[i];
                sum.iter_mut().zip(v.as_slice()).for_each(|(a, b)| *a += b);
                *n += 1;
            }
        }
    }
    Ok(words
        .iter()
        .zip(sums)
        .filter(|(_, (_, n))| *n > 0)
        .map(|(w, (sum, n))| {
            let mean = sum.into_iter().map(|x| x / n as f64).collect::<Vec<_>>();
            (w.as_ref().to_string(), LatentVector(mean), n)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autoencoder::{init_model, ModelConfig};
    use crate::corpus::Vocabulary;

    #[test]
    fn mean_over_containing_sentences() {
        let vocab = Vocabulary::from_words(["ice", "glass", "hello", "there"]);
        let config = ModelConfig {
            latent_dim: 3,
            embedding_dim: 4,
            hidden_size: 4,
            hidden_layers: 1,
            ..ModelConfig::default()
        };
        let m = init_model(&config, &vocab).unwrap();
        let docs = vec![
            Document::new("1", "ice glass. hello there", "drugs", None),
            Document::new("2", "ice there", "drugs", None),
        ];
        let got = contextual_word_vectors(&m, &docs, &["ice", "hello", "absent", "glass"]).unwrap();
        let names: Vec<&str> = got.iter().map(|(w, _, _)| w.as_str()).collect();
        assert_eq!(names, ["ice", "hello", "glass"]);
        assert_eq!(got[0].2, 2);
        let s1 = m.encode_tokens(&["ice", "glass"]).unwrap();
        let s2 = m.encode_tokens(&["ice", "there"]).unwrap();
        for i in 0..3 {
            assert!((got[0].1 .0[i] - (s1.0[i] + s2.0[i]) / 2.0).abs() < 1e-12);
            assert!((got[2].1 .0[i] - s1.0[i]).abs() < 1e-12);
        }
    }
}
