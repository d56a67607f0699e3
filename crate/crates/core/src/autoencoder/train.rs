use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::model::{AutoEncoderModel, ModelConfig, SeqBatch, Stochastic, Variant};
use super::noise::apply_noise;
use super::params::{clip_grad_norm, Adam};
use super::tape::Graph;
use crate::corpus::Document;
use crate::error::{Error, Result};

/// Mean losses over the batches of one epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub epoch: usize,
    pub reconstruction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kl: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discriminator: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<f64>,
    /// Reconstruction error rate (%) on the validation documents.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub val_error_rate: Option<f64>,
}

/// Losses of the three adversarial steps on one batch, in update order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AaeLosses {
    pub reconstruction: f64,
    pub discriminator: f64,
    pub generator: f64,
}

struct Trainer<'m> {
    model: &'m mut AutoEncoderModel,
    opt: Adam,
    rng: ChaCha8Rng,
    enc_ids: Vec<usize>,
    dec_ids: Vec<usize>,
    disc_ids: Vec<usize>,
}

impl<'m> Trainer<'m> {
    fn new(model: &'m mut AutoEncoderModel) -> Self {
        let cfg = model.config();
        let opt = Adam::new(model.params(), cfg.learning_rate);
        // Offset keeps the training stream independent of initialisation.
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
        let (enc_ids, dec_ids, disc_ids) = model.param_groups();
        Self {
            model,
            opt,
            rng,
            enc_ids,
            dec_ids,
            disc_ids,
        }
    }

    fn clip_and_step(&mut self, grads: &mut [Option<Array2<f64>>], ids: &[usize]) {
        clip_grad_norm(grads, ids, self.model.config().clip_norm);
        self.opt.step(self.model.params_mut(), grads, ids);
    }

    fn corrupt(&mut self, seqs: &[Vec<usize>]) -> Vec<Vec<usize>> {
        let cfg = self.model.config();
        if !cfg.variant.is_denoising() {
            return seqs.to_vec();
        }
        let noise = cfg.noise;
        let v = self.model.vocab().len();
        seqs.iter()
            .map(|s| apply_noise(s, &noise, v, &mut self.rng))
            .collect()
    }

    /// Reconstruction step (plus KL for the variational variant). Returns
    /// `(reconstruction, kl)`.
    fn reconstruction_step(&mut self, clean: &[Vec<usize>]) -> (f64, Option<f64>) {
        let noisy = self.corrupt(clean);
        let input = SeqBatch::new(&noisy);
        let target = SeqBatch::new(clean);
        let dropout = self.model.config().dropout;
        let kl_literal = self.model.config().kl_literal;
        let model = &*self.model;
        let mut g = Graph::new();
        let mut pv = model.new_param_vars();
        let mut stoch = Some(Stochastic {
            rng: &mut self.rng,
            dropout,
        });
        let enc = model.encoder_graph(&mut g, &mut pv, &input, &mut stoch);
        let z = match stoch.as_mut() {
            Some(s) => model.reparameterize(&mut g, &enc, s.rng),
            None => enc.latent,
        };
        let logits = model.decoder_graph(&mut g, &mut pv, z, &target, &mut stoch);
        let rec = g.bce_one_hot(logits, target.ids.clone(), target.weights.clone());
        let rec_value = g.scalar(rec);
        let (loss, kl_value) = match enc.logvar {
            Some(lv) => {
                let kl = g.kl_normal(enc.latent, lv, kl_literal);
                let kl_value = g.scalar(kl);
                (g.add(rec, kl), Some(kl_value))
            }
            None => (rec, None),
        };
        let mut grads = g.backward(loss, model.params().len());
        let ids: Vec<usize> = self.enc_ids.iter().chain(&self.dec_ids).copied().collect();
        self.clip_and_step(&mut grads, &ids);
        (rec_value, kl_value)
    }

    /// Discriminator step: prior samples labelled 1, encoded inputs 0.
    fn discriminator_step(&mut self, clean: &[Vec<usize>]) -> Result<f64> {
        let model = &*self.model;
        let batch = SeqBatch::new(clean);
        let mut g = Graph::new();
        let mut pv = model.new_param_vars();
        let enc = model.encoder_graph(&mut g, &mut pv, &batch, &mut None);
        let encoded = g.value(enc.latent).clone();
        let prior = Array2::from_shape_simple_fn(encoded.raw_dim(), || {
            StandardNormal.sample(&mut self.rng)
        });
        let mut g = Graph::new();
        let mut pv = model.new_param_vars();
        let z_real = g.constant(prior);
        let z_fake = g.constant(encoded);
        let d_real = model.discriminator_graph(&mut g, &mut pv, z_real)?;
        let d_fake = model.discriminator_graph(&mut g, &mut pv, z_fake)?;
        let l_real = g.logistic_loss(d_real, 1.0);
        let l_fake = g.logistic_loss(d_fake, 0.0);
        let loss = g.add(l_real, l_fake);
        let value = g.scalar(loss);
        let mut grads = g.backward(loss, model.params().len());
        let ids = self.disc_ids.clone();
        self.clip_and_step(&mut grads, &ids);
        Ok(value)
    }

    /// Generator step: the encoder learns to make encoded inputs look like
    /// prior samples.
    fn generator_step(&mut self, clean: &[Vec<usize>]) -> Result<f64> {
        let model = &*self.model;
        let batch = SeqBatch::new(clean);
        let mut g = Graph::new();
        let mut pv = model.new_param_vars();
        let enc = model.encoder_graph(&mut g, &mut pv, &batch, &mut None);
        let d = model.discriminator_graph(&mut g, &mut pv, enc.latent)?;
        let loss = g.logistic_loss(d, 1.0);
        let value = g.scalar(loss);
        let mut grads = g.backward(loss, model.params().len());
        let ids = self.enc_ids.clone();
        self.clip_and_step(&mut grads, &ids);
        Ok(value)
    }

    fn aae_step(&mut self, clean: &[Vec<usize>]) -> Result<AaeLosses> {
        let (reconstruction, _) = self.reconstruction_step(clean);
        let discriminator = self.discriminator_step(clean)?;
        let generator = self.generator_step(clean)?;
        Ok(AaeLosses {
            reconstruction,
            discriminator,
            generator,
        })
    }
}

fn encode_docs(model: &AutoEncoderModel, docs: &[Document]) -> Vec<Vec<usize>> {
    docs.iter()
        .map(|d| model.document_ids(d))
        .filter(|s| !s.is_empty())
        .collect()
}

/// Trains in place for `config.epochs` epochs and appends one record per
/// epoch to the model history. Identical seeds give identical histories.
pub fn train(
    model: &mut AutoEncoderModel,
    train_docs: &[Document],
    val_docs: &[Document],
) -> Result<Vec<TrainingRecord>> {
    let seqs = encode_docs(model, train_docs);
    if seqs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let val_seqs = encode_docs(model, val_docs);
    let cfg: ModelConfig = model.config().clone();
    let start_epoch = model.history.len();
    let mut records = Vec::with_capacity(cfg.epochs);
    let mut trainer = Trainer::new(model);
    let mut order: Vec<usize> = (0..seqs.len()).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut trainer.rng);
        let (mut rec, mut kl, mut disc, mut gen) = (0.0, 0.0, 0.0, 0.0);
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<Vec<usize>> = chunk.iter().map(|&i| seqs[i].clone()).collect();
            if cfg.variant == Variant::Aae {
                let l = trainer.aae_step(&batch)?;
                rec += l.reconstruction;
                disc += l.discriminator;
                gen += l.generator;
            } else {
                let (r, k) = trainer.reconstruction_step(&batch);
                rec += r;
                kl += k.unwrap_or(0.0);
            }
            batches += 1;
        }
        let n = batches as f64;
        let val_error_rate = if val_seqs.is_empty() {
            None
        } else {
            Some(error_rate_of(trainer.model, &val_seqs)?)
        };
        records.push(TrainingRecord {
            epoch: start_epoch + epoch + 1,
            reconstruction: rec / n,
            kl: (cfg.variant == Variant::Vae).then_some(kl / n),
            discriminator: (cfg.variant == Variant::Aae).then_some(disc / n),
            generator: (cfg.variant == Variant::Aae).then_some(gen / n),
            val_error_rate,
        });
    }
    model.history.extend(records.iter().cloned());
    Ok(records)
}

/// Runs one adversarial update (reconstruction, discriminator, generator)
/// on a batch of id sequences and returns the three losses.
pub fn aae_losses(model: &mut AutoEncoderModel, batch: &[Vec<usize>]) -> Result<AaeLosses> {
    if model.config().variant != Variant::Aae {
        return Err(Error::WrongVariant {
            expected: Variant::Aae.to_string(),
            actual: model.config().variant.to_string(),
        });
    }
    let batch: Vec<Vec<usize>> = batch.iter().map(|s| model.truncate(s).to_vec()).collect();
    if batch.is_empty() || batch.iter().any(Vec::is_empty) {
        return Err(Error::EmptySequence);
    }
    Trainer::new(model).aae_step(&batch)
}

fn error_rate_of(model: &AutoEncoderModel, seqs: &[Vec<usize>]) -> Result<f64> {
    let losses = model.sequence_losses(seqs)?;
    Ok(100.0 * losses.iter().sum::<f64>() / losses.len() as f64)
}

/// Mean per-document reconstruction loss on clean inputs, as a percentage.
pub fn reconstruction_error_rate(model: &AutoEncoderModel, docs: &[Document]) -> Result<f64> {
    let seqs = encode_docs(model, docs);
    if seqs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    error_rate_of(model, &seqs)
}
