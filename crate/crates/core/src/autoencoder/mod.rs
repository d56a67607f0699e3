//! Bi-LSTM sequence autoencoders: plain, denoising, stacked denoising,
//! variational and adversarial.

mod checkpoint;
mod gradcheck;
pub mod losses;
mod model;
pub mod noise;
mod params;
pub mod tape;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_VERSION};
pub use gradcheck::{check_gradients, GradientReport};
pub use losses::{
    discriminator_loss, generator_loss, kl_divergence, kl_divergence_literal, reconstruction_loss,
};
pub use model::{init_model, AutoEncoderModel, LatentVector, ModelConfig, Variant};
pub use noise::{apply_noise, NoiseSpec};
pub use params::{Adam, NamedParam, ParamStore};
pub use train::{aae_losses, reconstruction_error_rate, train, AaeLosses, TrainingRecord};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, Vocabulary};

    fn tiny_vocab() -> Vocabulary {
        Vocabulary::from_words(["a", "b", "c", "d", "e", "f", "g"])
    }

    fn tiny_config(variant: Variant) -> ModelConfig {
        ModelConfig {
            variant,
            latent_dim: 3,
            embedding_dim: 3,
            hidden_layers: 2,
            hidden_size: 3,
            dropout: 0.0,
            batch_size: 4,
            learning_rate: 0.01,
            epochs: 2,
            max_seq_len: 6,
            seed: 11,
            discriminator_hidden: 4,
            ..ModelConfig::default()
        }
    }

    fn docs() -> Vec<Document> {
        ["a b c", "d e", "f g a b", "c c d", "e f g", "b a"]
            .iter()
            .enumerate()
            .map(|(i, t)| Document::new(format!("d{i}"), *t, "x", None))
            .collect()
    }

    #[test]
    fn init_is_deterministic_and_structural() {
        let v = tiny_vocab();
        let a = init_model(&tiny_config(Variant::Sae), &v).unwrap();
        let b = init_model(&tiny_config(Variant::Sae), &v).unwrap();
        assert_eq!(a.params(), b.params());
        assert!(!a.has_variance_head() && !a.has_discriminator());
        assert!(init_model(&tiny_config(Variant::Vae), &v).unwrap().has_variance_head());
        assert!(init_model(&tiny_config(Variant::Aae), &v).unwrap().has_discriminator());
        let bad = ModelConfig {
            latent_dim: 0,
            ..tiny_config(Variant::Sae)
        };
        assert!(init_model(&bad, &v).is_err());
    }

    #[test]
    fn encode_shapes_truncation_and_errors() {
        let v = tiny_vocab();
        let m = init_model(&tiny_config(Variant::Vae), &v).unwrap();
        let one = m.encode(&[4]).unwrap();
        assert_eq!(one.dim(), 3);
        assert_eq!(one, m.encode(&[4]).unwrap());
        let long: Vec<usize> = (0..16).map(|i| 3 + i % 7).collect();
        assert_eq!(m.encode(&long).unwrap(), m.encode(&long[..6]).unwrap());
        assert!(m.encode(&[]).is_err());
        let batch = m.encode_batch(&[vec![3, 4], vec![5]]).unwrap();
        assert_eq!(batch[1], m.encode(&[5]).unwrap());
        assert!(batch[0].as_slice().iter().all(|x| x.is_finite()));
    }

    #[test]
    fn padding_does_not_leak_between_rows() {
        let v = tiny_vocab();
        let m = init_model(&tiny_config(Variant::Sae), &v).unwrap();
        let alone = m.encode(&[3, 4]).unwrap();
        let padded = m.encode_batch(&[vec![3, 4], vec![5, 6, 7, 8, 9]]).unwrap();
        for (a, b) in alone.as_slice().iter().zip(padded[0].as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn sae_gradients_match_finite_differences() {
        let m = init_model(&tiny_config(Variant::Sae), &tiny_vocab()).unwrap();
        let r = check_gradients(&m, &[vec![3, 4, 5], vec![6, 7]], 1e-5, 1e-6).unwrap();
        assert!(r.max_relative_error <= 1e-4, "{r:?}");
    }

    #[test]
    fn vae_gradients_match_finite_differences() {
        let m = init_model(&tiny_config(Variant::Vae), &tiny_vocab()).unwrap();
        let r = check_gradients(&m, &[vec![3, 9, 5], vec![6]], 1e-5, 1e-6).unwrap();
        assert!(r.max_relative_error <= 1e-4, "{r:?}");
    }

    #[test]
    fn training_is_deterministic_and_records_components() {
        let v = tiny_vocab();
        let d = docs();
        for variant in Variant::ALL {
            let run = || {
                let mut m = init_model(&tiny_config(variant), &v).unwrap();
                train(&mut m, &d, &d[..2]).unwrap()
            };
            let h = run();
            assert_eq!(h.len(), 2);
            assert_eq!(h, run());
            assert_eq!(h[0].kl.is_some(), variant == Variant::Vae);
            assert_eq!(h[0].discriminator.is_some(), variant == Variant::Aae);
            assert!(h[0].val_error_rate.is_some());
        }
    }

    #[test]
    fn zero_epochs_leaves_model_unchanged() {
        let v = tiny_vocab();
        let cfg = ModelConfig {
            epochs: 0,
            ..tiny_config(Variant::Sae)
        };
        let mut m = init_model(&cfg, &v).unwrap();
        let before = m.params().clone();
        assert!(train(&mut m, &docs(), &[]).unwrap().is_empty());
        assert_eq!(&before, m.params());
        assert!(train(&mut m, &[], &[]).is_err());
    }

    #[test]
    fn training_lowers_error_rate() {
        let v = tiny_vocab();
        let cfg = ModelConfig {
            epochs: 30,
            ..tiny_config(Variant::Sae)
        };
        let mut m = init_model(&cfg, &v).unwrap();
        let d = docs();
        let before = reconstruction_error_rate(&m, &d).unwrap();
        train(&mut m, &d, &[]).unwrap();
        assert!(reconstruction_error_rate(&m, &d).unwrap() < before);
    }

    #[test]
    fn aae_losses_requires_adversarial_variant() {
        let v = tiny_vocab();
        let mut sae = init_model(&tiny_config(Variant::Sae), &v).unwrap();
        assert!(aae_losses(&mut sae, &[vec![3]]).is_err());
        let mut aae = init_model(&tiny_config(Variant::Aae), &v).unwrap();
        let l = aae_losses(&mut aae, &[vec![3, 4], vec![5]]).unwrap();
        assert!(l.discriminator > 0.0 && l.generator > 0.0 && l.reconstruction > 0.0);
    }

    #[test]
    fn checkpoint_roundtrip_and_vocab_guard() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let v = tiny_vocab();
        let mut m = init_model(&tiny_config(Variant::Aae), &v).unwrap();
        train(&mut m, &docs(), &[]).unwrap();
        save_checkpoint(&m, &path).unwrap();
        let back = load_checkpoint(&path, Some(&v.hash())).unwrap();
        assert_eq!(back.params(), m.params());
        assert_eq!(back.history, m.history);
        assert_eq!(back.encode(&[3, 4]).unwrap(), m.encode(&[3, 4]).unwrap());
        assert!(matches!(
            load_checkpoint(&path, Some("deadbeef")),
            Err(crate::Error::VocabularyMismatch { .. })
        ));
    }
}
