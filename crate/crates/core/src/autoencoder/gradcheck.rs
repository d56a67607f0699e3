//! Finite-difference verification of the training objective's gradients.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{AutoEncoderModel, SeqBatch};
use super::tape::Graph;
use crate::error::{Error, Result};

/// Comparison of analytic and central-difference gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientReport {
    pub max_relative_error: f64,
    pub max_absolute_error: f64,
    pub checked: usize,
}

/// Reconstruction objective (plus KL for the variational variant) without
/// dropout or input noise. The reparameterisation noise is drawn from a
/// fixed seed so repeated evaluations see the same sample.
fn objective(
    model: &AutoEncoderModel,
    batch: &SeqBatch,
    eps_seed: u64,
    want_grads: bool,
) -> (f64, Vec<Option<ndarray::Array2<f64>>>) {
    let mut g = Graph::new();
    let mut pv = model.new_param_vars();
    let mut rng = ChaCha8Rng::seed_from_u64(eps_seed);
    let enc = model.encoder_graph(&mut g, &mut pv, batch, &mut None);
    let z = model.reparameterize(&mut g, &enc, &mut rng);
    let logits = model.decoder_graph(&mut g, &mut pv, z, batch, &mut None);
    let mut loss = g.bce_one_hot(logits, batch.ids.clone(), batch.weights.clone());
    if let Some(lv) = enc.logvar {
        let kl = g.kl_normal(enc.latent, lv, model.config().kl_literal);
        loss = g.add(loss, kl);
    }
    let grads = if want_grads {
        g.backward(loss, model.params().len())
    } else {
        Vec::new()
    };
    (g.scalar(loss), grads)
}

/// Checks every scalar parameter of `model` on the given sequences.
/// Relative error is `|a - n| / max(|a|, |n|, floor)`.
pub fn check_gradients(
    model: &AutoEncoderModel,
    seqs: &[Vec<usize>],
    step: f64,
    floor: f64,
) -> Result<GradientReport> {
    if seqs.is_empty() || seqs.iter().any(Vec::is_empty) {
        return Err(Error::EmptySequence);
    }
    let batch = SeqBatch::new(seqs);
    let eps_seed = model.config().seed ^ 0x5eed;
    let (_, grads) = objective(model, &batch, eps_seed, true);
    let mut probe = model.clone();
    let mut report = GradientReport {
        max_relative_error: 0.0,
        max_absolute_error: 0.0,
        checked: 0,
    };
    for id in 0..model.params().len() {
        let n = model.params().get(id).len();
        for k in 0..n {
            let original = model.params().get(id).as_slice().expect("standard layout")[k];
            let set = |p: &mut AutoEncoderModel, v: f64| {
                p.params_mut().get_mut(id).as_slice_mut().expect("standard layout")[k] = v;
            };
            set(&mut probe, original + step);
            let (plus, _) = objective(&probe, &batch, eps_seed, false);
            set(&mut probe, original - step);
            let (minus, _) = objective(&probe, &batch, eps_seed, false);
            set(&mut probe, original);
            let numeric = (plus - minus) / (2.0 * step);
            let analytic = grads[id]
                .as_ref()
                .map(|g| g.as_slice().expect("standard layout")[k])
                .unwrap_or(0.0);
            let abs = (analytic - numeric).abs();
            let rel = abs / analytic.abs().max(numeric.abs()).max(floor);
            report.max_absolute_error = report.max_absolute_error.max(abs);
            report.max_relative_error = report.max_relative_error.max(rel);
            report.checked += 1;
        }
    }
    Ok(report)
}
