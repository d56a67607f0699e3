//! Bi-LSTM encoder/decoder shared by all five variants.
//!
//! Sequences are laid out time-major: row `t * batch + i` holds position `t`
//! of sequence `i`. Padded positions carry a zero mask, which freezes the
//! recurrent state and removes the position from the loss.

use std::fmt;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::noise::NoiseSpec;
use super::params::ParamStore;
use super::tape::{Graph, Var};
use super::TrainingRecord;
use crate::corpus::{Document, Vocabulary, PAD};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Sae,
    Dae,
    Sdae,
    Vae,
    Aae,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Sae,
        Variant::Dae,
        Variant::Sdae,
        Variant::Vae,
        Variant::Aae,
    ];

    pub fn is_denoising(self) -> bool {
        matches!(self, Variant::Dae | Variant::Sdae)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Sae => "sae",
            Variant::Dae => "dae",
            Variant::Sdae => "sdae",
            Variant::Vae => "vae",
            Variant::Aae => "aae",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sae" => Ok(Variant::Sae),
            "dae" => Ok(Variant::Dae),
            "sdae" => Ok(Variant::Sdae),
            "vae" => Ok(Variant::Vae),
            "aae" => Ok(Variant::Aae),
            other => Err(Error::InvalidArgument(format!("unknown variant `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub variant: Variant,
    pub latent_dim: usize,
    pub embedding_dim: usize,
    /// Stacked recurrent layers in both encoder and decoder. The plain
    /// denoising variant always uses a single layer.
    pub hidden_layers: usize,
    /// Units per direction.
    pub hidden_size: usize,
    /// Dropout between stacked recurrent layers during training.
    pub dropout: f64,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub max_seq_len: usize,
    pub seed: u64,
    pub noise: NoiseSpec,
    pub discriminator_hidden: usize,
    /// Global gradient-norm clip; 0 disables.
    pub clip_norm: f64,
    /// Use `ln sigma` instead of `ln sigma^2` in the KL term.
    pub kl_literal: bool,
    /// Start the output bias at the log-odds of a uniform token so early
    /// training is not spent learning unigram frequencies.
    pub output_bias_prior: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Sae,
            latent_dim: 64,
            embedding_dim: 128,
            hidden_layers: 2,
            hidden_size: 128,
            dropout: 0.5,
            batch_size: 256,
            learning_rate: 0.0005,
            epochs: 50,
            max_seq_len: 64,
            seed: 0,
            noise: NoiseSpec::default(),
            discriminator_hidden: 64,
            clip_norm: 5.0,
            kl_literal: false,
            output_bias_prior: false,
        }
    }
}

impl ModelConfig {
    pub fn with_variant(variant: Variant) -> Self {
        Self {
            variant,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.latent_dim == 0 {
            return bad("latent_dim must be positive");
        }
        if self.embedding_dim == 0 || self.hidden_size == 0 || self.hidden_layers == 0 {
            return bad("embedding_dim, hidden_size and hidden_layers must be positive");
        }
        if self.variant == Variant::Sdae && self.hidden_layers < 2 {
            return bad("the stacked denoising variant needs hidden_layers >= 2");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 || self.max_seq_len == 0 {
            return bad("batch_size and max_seq_len must be positive");
        }
        if !self.noise.is_valid() {
            return bad("noise probabilities must lie in [0, 1]");
        }
        if self.variant == Variant::Aae && self.discriminator_hidden == 0 {
            return bad("discriminator_hidden must be positive");
        }
        Ok(())
    }

    /// Recurrent depth actually used by the variant.
    pub fn effective_layers(&self) -> usize {
        if self.variant == Variant::Dae {
            1
        } else {
            self.hidden_layers
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentVector(pub Vec<f64>);

impl LatentVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for LatentVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

#[derive(Debug, Clone, Copy)]
struct LstmIds {
    wx: usize,
    wh: usize,
    b: usize,
}

#[derive(Debug, Clone, Copy)]
struct BiLstmIds {
    fwd: LstmIds,
    bwd: LstmIds,
}

#[derive(Debug, Clone, Copy)]
struct LinearIds {
    w: usize,
    b: usize,
}

#[derive(Debug, Clone)]
struct Layout {
    embedding: usize,
    encoder: Vec<BiLstmIds>,
    latent: LinearIds,
    logvar: Option<LinearIds>,
    decoder: Vec<BiLstmIds>,
    output: LinearIds,
    discriminator: Option<[LinearIds; 2]>,
}

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize, bound: f64) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-bound..=bound))
}

fn xavier(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    uniform(rng, rows, cols, (6.0 / (rows + cols) as f64).sqrt())
}

fn add_linear(
    ps: &mut ParamStore,
    rng: &mut ChaCha8Rng,
    name: &str,
    fan_in: usize,
    fan_out: usize,
) -> LinearIds {
    LinearIds {
        w: ps.push(format!("{name}.w"), xavier(rng, fan_in, fan_out)),
        b: ps.push(format!("{name}.b"), Array2::zeros((1, fan_out))),
    }
}

fn add_lstm(
    ps: &mut ParamStore,
    rng: &mut ChaCha8Rng,
    name: &str,
    input: usize,
    hidden: usize,
) -> LstmIds {
    let bound = 1.0 / (hidden as f64).sqrt();
    let mut b = Array2::zeros((1, 4 * hidden));
    // forget-gate bias
    b.slice_mut(ndarray::s![.., hidden..2 * hidden]).fill(1.0);
    LstmIds {
        wx: ps.push(format!("{name}.wx"), uniform(rng, input, 4 * hidden, bound)),
        wh: ps.push(format!("{name}.wh"), uniform(rng, hidden, 4 * hidden, bound)),
        b: ps.push(format!("{name}.b"), b),
    }
}

fn add_bilstm(
    ps: &mut ParamStore,
    rng: &mut ChaCha8Rng,
    name: &str,
    input: usize,
    hidden: usize,
) -> BiLstmIds {
    BiLstmIds {
        fwd: add_lstm(ps, rng, &format!("{name}.fwd"), input, hidden),
        bwd: add_lstm(ps, rng, &format!("{name}.bwd"), input, hidden),
    }
}

fn build_params(config: &ModelConfig, vocab_size: usize) -> (ParamStore, Layout) {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut ps = ParamStore::default();
    let h = config.hidden_size;
    let layers = config.effective_layers();
    let embedding = ps.push(
        "embedding",
        uniform(&mut rng, vocab_size, config.embedding_dim, 0.1),
    );
    let encoder = (0..layers)
        .map(|l| {
            let input = if l == 0 { config.embedding_dim } else { 2 * h };
            add_bilstm(&mut ps, &mut rng, &format!("encoder.{l}"), input, h)
        })
        .collect();
    let latent = add_linear(&mut ps, &mut rng, "latent", 2 * h, config.latent_dim);
    let logvar = (config.variant == Variant::Vae)
        .then(|| add_linear(&mut ps, &mut rng, "logvar", 2 * h, config.latent_dim));
    let decoder = (0..layers)
        .map(|l| {
            let input = if l == 0 { config.latent_dim } else { 2 * h };
            add_bilstm(&mut ps, &mut rng, &format!("decoder.{l}"), input, h)
        })
        .collect();
    let output = add_linear(&mut ps, &mut rng, "output", 2 * h, vocab_size);
    if config.output_bias_prior {
        let prior = (1.0 / vocab_size as f64).max(1e-6);
        ps.get_mut(output.b).fill((prior / (1.0 - prior)).ln());
    }
    let discriminator = (config.variant == Variant::Aae).then(|| {
        let dh = config.discriminator_hidden;
        [
            add_linear(&mut ps, &mut rng, "discriminator.0", config.latent_dim, dh),
            add_linear(&mut ps, &mut rng, "discriminator.1", dh, 1),
        ]
    });
    let layout = Layout {
        embedding,
        encoder,
        latent,
        logvar,
        decoder,
        output,
        discriminator,
    };
    (ps, layout)
}

/// Padded, time-major view of a batch of id sequences.
pub(crate) struct SeqBatch {
    pub ids: Vec<usize>,
    pub masks: Vec<Array2<f64>>,
    pub weights: Vec<f64>,
    pub size: usize,
}

impl SeqBatch {
    pub fn new<S: AsRef<[usize]>>(seqs: &[S]) -> Self {
        let size = seqs.len();
        let steps = seqs.iter().map(|s| s.as_ref().len()).max().unwrap_or(0);
        let mut ids = vec![PAD; steps * size];
        let mut weights = vec![0.0; steps * size];
        let mut masks = vec![Array2::zeros((size, 1)); steps];
        for (i, s) in seqs.iter().enumerate() {
            for (t, &id) in s.as_ref().iter().enumerate() {
                ids[t * size + i] = id;
                weights[t * size + i] = 1.0;
                masks[t][[i, 0]] = 1.0;
            }
        }
        Self {
            ids,
            masks,
            weights,
            size,
        }
    }
}

/// Per-graph cache of parameter nodes, created on first use.
pub(crate) struct ParamVars {
    vars: Vec<Option<Var>>,
}

impl ParamVars {
    pub fn new(n: usize) -> Self {
        Self {
            vars: vec![None; n],
        }
    }

    fn get(&mut self, g: &mut Graph, ps: &ParamStore, id: usize) -> Var {
        *self.vars[id].get_or_insert_with(|| g.param(id, ps.get(id)))
    }
}

enum RecurrentInput {
    /// One row block per time step, `(steps * batch) x in`.
    PerStep(Var),
    /// The same `batch x in` input at every step.
    Shared(Var),
}

/// Randomness consumed by a training forward pass.
pub(crate) struct Stochastic<'a> {
    pub rng: &'a mut ChaCha8Rng,
    pub dropout: f64,
}

pub(crate) struct EncoderOut {
    /// Deterministic latent (the mean head for the variational variant).
    pub latent: Var,
    pub logvar: Option<Var>,
}

#[derive(Debug, Clone)]
pub struct AutoEncoderModel {
    config: ModelConfig,
    vocab: Vocabulary,
    params: ParamStore,
    layout: Layout,
    pub history: Vec<TrainingRecord>,
}

impl AutoEncoderModel {
    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn latent_dim(&self) -> usize {
        self.config.latent_dim
    }

    pub fn has_variance_head(&self) -> bool {
        self.layout.logvar.is_some()
    }

    pub fn has_discriminator(&self) -> bool {
        self.layout.discriminator.is_some()
    }

    pub(crate) fn from_parts(
        config: ModelConfig,
        vocab: Vocabulary,
        params: ParamStore,
        history: Vec<TrainingRecord>,
    ) -> Result<Self> {
        config.validate()?;
        let (reference, layout) = build_params(&config, vocab.len());
        if reference.len() != params.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} parameter tensors, found {}",
                reference.len(),
                params.len()
            )));
        }
        for id in 0..reference.len() {
            if reference.name(id) != params.name(id)
                || reference.get(id).shape() != params.get(id).shape()
            {
                return Err(Error::ShapeMismatch(format!(
                    "parameter `{}` {:?} does not match `{}` {:?}",
                    params.name(id),
                    params.get(id).shape(),
                    reference.name(id),
                    reference.get(id).shape()
                )));
            }
        }
        Ok(Self {
            config,
            vocab,
            params,
            layout,
            history,
        })
    }

    /// Parameter ids grouped as (encoder, decoder, discriminator).
    pub(crate) fn param_groups(&self) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
        let l = &self.layout;
        let lstm = |ids: &[BiLstmIds]| {
            ids.iter()
                .flat_map(|b| [b.fwd, b.bwd])
                .flat_map(|d| [d.wx, d.wh, d.b])
                .collect::<Vec<_>>()
        };
        let mut enc = vec![l.embedding];
        enc.extend(lstm(&l.encoder));
        enc.extend([l.latent.w, l.latent.b]);
        if let Some(lv) = l.logvar {
            enc.extend([lv.w, lv.b]);
        }
        let mut dec = lstm(&l.decoder);
        dec.extend([l.output.w, l.output.b]);
        let disc = l
            .discriminator
            .iter()
            .flatten()
            .flat_map(|x| [x.w, x.b])
            .collect();
        (enc, dec, disc)
    }

    fn linear(&self, g: &mut Graph, pv: &mut ParamVars, ids: LinearIds, x: Var) -> Var {
        let w = pv.get(g, &self.params, ids.w);
        let b = pv.get(g, &self.params, ids.b);
        let xw = g.matmul(x, w);
        g.add_row(xw, b)
    }

    /// Runs one direction of an LSTM layer; returns per-step outputs in time
    /// order and the final hidden state.
    #[allow(clippy::too_many_arguments)]
    fn lstm_direction(
        &self,
        g: &mut Graph,
        pv: &mut ParamVars,
        ids: LstmIds,
        input: &RecurrentInput,
        masks: &[Array2<f64>],
        batch: usize,
        reverse: bool,
    ) -> (Vec<Var>, Var) {
        let h_size = self.config.hidden_size;
        let wx = pv.get(g, &self.params, ids.wx);
        let wh = pv.get(g, &self.params, ids.wh);
        let b = pv.get(g, &self.params, ids.b);
        let projected = match input {
            RecurrentInput::PerStep(x) | RecurrentInput::Shared(x) => {
                let xw = g.matmul(*x, wx);
                g.add_row(xw, b)
            }
        };
        let steps = masks.len();
        let mut h = g.constant(Array2::zeros((batch, h_size)));
        let mut c = h;
        let mut outputs = vec![h; steps];
        let order: Vec<usize> = if reverse {
            (0..steps).rev().collect()
        } else {
            (0..steps).collect()
        };
        for (k, &t) in order.iter().enumerate() {
            let xt = match input {
                RecurrentInput::PerStep(_) => g.slice_rows(projected, t * batch, (t + 1) * batch),
                RecurrentInput::Shared(_) => projected,
            };
            let gates = if k == 0 {
                xt
            } else {
                let hw = g.matmul(h, wh);
                g.add(xt, hw)
            };
            let sig = g.sigmoid(gates);
            let i_gate = g.slice_cols(sig, 0, h_size);
            let f_gate = g.slice_cols(sig, h_size, 2 * h_size);
            let o_gate = g.slice_cols(sig, 3 * h_size, 4 * h_size);
            let cand_pre = g.slice_cols(gates, 2 * h_size, 3 * h_size);
            let cand = g.tanh(cand_pre);
            let ic = g.mul(i_gate, cand);
            let c_new = if k == 0 {
                ic
            } else {
                let fc = g.mul(f_gate, c);
                g.add(ic, fc)
            };
            let c_act = g.tanh(c_new);
            let h_new = g.mul(o_gate, c_act);
            c = g.blend(masks[t].clone(), c_new, c);
            h = g.blend(masks[t].clone(), h_new, h);
            outputs[t] = h;
        }
        (outputs, h)
    }

    /// Bidirectional layer: `(steps * batch) x 2H` outputs plus the final
    /// forward and backward states.
    fn bilstm(
        &self,
        g: &mut Graph,
        pv: &mut ParamVars,
        ids: BiLstmIds,
        input: &RecurrentInput,
        masks: &[Array2<f64>],
        batch: usize,
    ) -> (Var, Var, Var) {
        let (fo, fh) = self.lstm_direction(g, pv, ids.fwd, input, masks, batch, false);
        let (bo, bh) = self.lstm_direction(g, pv, ids.bwd, input, masks, batch, true);
        let f_all = g.concat_rows(&fo);
        let b_all = g.concat_rows(&bo);
        (g.concat_cols(&[f_all, b_all]), fh, bh)
    }

    fn dropout(&self, g: &mut Graph, x: Var, stoch: &mut Option<Stochastic<'_>>) -> Var {
        match stoch {
            Some(s) if s.dropout > 0.0 => {
                let keep = 1.0 - s.dropout;
                let shape = g.value(x).raw_dim();
                let mask = Array2::from_shape_simple_fn(shape, || {
                    if s.rng.random::<f64>() < keep {
                        1.0 / keep
                    } else {
                        0.0
                    }
                });
                g.mul_const(x, mask)
            }
            _ => x,
        }
    }

    pub(crate) fn encoder_graph(
        &self,
        g: &mut Graph,
        pv: &mut ParamVars,
        batch: &SeqBatch,
        stoch: &mut Option<Stochastic<'_>>,
    ) -> EncoderOut {
        let table = pv.get(g, &self.params, self.layout.embedding);
        let mut x = g.gather(table, batch.ids.clone());
        let mut finals = (x, x);
        let n_layers = self.layout.encoder.len();
        for (l, ids) in self.layout.encoder.iter().enumerate() {
            let (out, fh, bh) =
                self.bilstm(g, pv, *ids, &RecurrentInput::PerStep(x), &batch.masks, batch.size);
            x = if l + 1 < n_layers {
                self.dropout(g, out, stoch)
            } else {
                out
            };
            finals = (fh, bh);
        }
        let summary = g.concat_cols(&[finals.0, finals.1]);
        let latent = self.linear(g, pv, self.layout.latent, summary);
        let logvar = self
            .layout
            .logvar
            .map(|ids| self.linear(g, pv, ids, summary));
        EncoderOut { latent, logvar }
    }

    /// Decoder logits, `(steps * batch) x vocab`, for a `batch x latent` code
    /// unrolled over the target layout.
    pub(crate) fn decoder_graph(
        &self,
        g: &mut Graph,
        pv: &mut ParamVars,
        z: Var,
        target: &SeqBatch,
        stoch: &mut Option<Stochastic<'_>>,
    ) -> Var {
        let mut input = RecurrentInput::Shared(z);
        let n_layers = self.layout.decoder.len();
        let mut top = z;
        for (l, ids) in self.layout.decoder.iter().enumerate() {
            let (out, _, _) = self.bilstm(g, pv, *ids, &input, &target.masks, target.size);
            top = if l + 1 < n_layers {
                self.dropout(g, out, stoch)
            } else {
                out
            };
            input = RecurrentInput::PerStep(top);
        }
        self.linear(g, pv, self.layout.output, top)
    }

    /// Discriminator logits for a `batch x latent` input.
    pub(crate) fn discriminator_graph(
        &self,
        g: &mut Graph,
        pv: &mut ParamVars,
        z: Var,
    ) -> Result<Var> {
        let [l0, l1] = self.layout.discriminator.ok_or(Error::WrongVariant {
            expected: Variant::Aae.to_string(),
            actual: self.config.variant.to_string(),
        })?;
        let h = self.linear(g, pv, l0, z);
        let h = g.relu(h);
        Ok(self.linear(g, pv, l1, h))
    }

    /// Samples `z = mu + sigma * eps` for the variational variant.
    pub(crate) fn reparameterize(
        &self,
        g: &mut Graph,
        enc: &EncoderOut,
        rng: &mut ChaCha8Rng,
    ) -> Var {
        match enc.logvar {
            Some(lv) => {
                let half = g.scale(lv, 0.5);
                let sigma = g.exp(half);
                let shape = g.value(sigma).raw_dim();
                let eps = Array2::from_shape_simple_fn(shape, || StandardNormal.sample(rng));
                let noise = g.mul_const(sigma, eps);
                g.add(enc.latent, noise)
            }
            None => enc.latent,
        }
    }

    pub(crate) fn new_param_vars(&self) -> ParamVars {
        ParamVars::new(self.params.len())
    }

    /// Clips a sequence to the configured maximum length.
    pub fn truncate<'a>(&self, ids: &'a [usize]) -> &'a [usize] {
        &ids[..ids.len().min(self.config.max_seq_len)]
    }

    pub fn document_ids(&self, doc: &Document) -> Vec<usize> {
        let ids: Vec<usize> = doc.tokens().map(|t| self.vocab.id(t)).collect();
        self.truncate(&ids).to_vec()
    }

    /// Encodes one id sequence. Sequences longer than `max_seq_len` are
    /// truncated; the variational variant returns its mean head.
    pub fn encode(&self, ids: &[usize]) -> Result<LatentVector> {
        Ok(self.encode_batch(&[ids])?.remove(0))
    }

    pub fn encode_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> Result<LatentVector> {
        self.encode(&self.vocab.encode(tokens))
    }

    /// Encodes each word as a length-one sequence.
    pub fn encode_words<S: AsRef<str>>(&self, words: &[S]) -> Result<Vec<LatentVector>> {
        let seqs: Vec<Vec<usize>> = words.iter().map(|w| vec![self.vocab.id(w.as_ref())]).collect();
        self.encode_batch(&seqs)
    }

    pub fn encode_batch<S: AsRef<[usize]>>(&self, seqs: &[S]) -> Result<Vec<LatentVector>> {
        let mut out = Vec::with_capacity(seqs.len());
        for chunk in seqs.chunks(256) {
            let trimmed: Vec<&[usize]> = chunk.iter().map(|s| self.truncate(s.as_ref())).collect();
            if trimmed.iter().any(|s| s.is_empty()) {
                return Err(Error::EmptySequence);
            }
            let batch = SeqBatch::new(&trimmed);
            let mut g = Graph::new();
            let mut pv = self.new_param_vars();
            let enc = self.encoder_graph(&mut g, &mut pv, &batch, &mut None);
            out.extend(
                g.value(enc.latent)
                    .rows()
                    .into_iter()
                    .map(|r| LatentVector(r.to_vec())),
            );
        }
        Ok(out)
    }

    pub fn encode_documents(&self, docs: &[Document]) -> Result<Vec<LatentVector>> {
        let seqs: Vec<Vec<usize>> = docs.iter().map(|d| self.document_ids(d)).collect();
        self.encode_batch(&seqs)
    }

    /// Decoder probabilities (`len x vocab`) for a clean input sequence.
    pub fn reconstruct(&self, ids: &[usize]) -> Result<Array2<f64>> {
        let ids = self.truncate(ids);
        if ids.is_empty() {
            return Err(Error::EmptySequence);
        }
        let batch = SeqBatch::new(&[ids]);
        let mut g = Graph::new();
        let mut pv = self.new_param_vars();
        let enc = self.encoder_graph(&mut g, &mut pv, &batch, &mut None);
        let logits = self.decoder_graph(&mut g, &mut pv, enc.latent, &batch, &mut None);
        let logits = g.sigmoid(logits);
        Ok(g.value(logits).clone())
    }

    /// Mean per-sequence reconstruction loss for clean inputs, one value per
    /// sequence.
    pub fn sequence_losses<S: AsRef<[usize]>>(&self, seqs: &[S]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(seqs.len());
        for chunk in seqs.chunks(256) {
            let trimmed: Vec<&[usize]> = chunk.iter().map(|s| self.truncate(s.as_ref())).collect();
            if trimmed.iter().any(|s| s.is_empty()) {
                return Err(Error::EmptySequence);
            }
            let batch = SeqBatch::new(&trimmed);
            let mut g = Graph::new();
            let mut pv = self.new_param_vars();
            let enc = self.encoder_graph(&mut g, &mut pv, &batch, &mut None);
            let logits = self.decoder_graph(&mut g, &mut pv, enc.latent, &batch, &mut None);
            let z = g.value(logits);
            let vocab = z.ncols() as f64;
            let mut sums = vec![0.0; batch.size];
            for (row_idx, row) in z.rows().into_iter().enumerate() {
                if batch.weights[row_idx] == 0.0 {
                    continue;
                }
                let target = batch.ids[row_idx];
                let mut acc = 0.0;
                for (j, &zj) in row.iter().enumerate() {
                    let p = (1.0 / (1.0 + (-zj).exp())).clamp(1e-7, 1.0 - 1e-7);
                    acc -= if j == target { p.ln() } else { (1.0 - p).ln() };
                }
                sums[row_idx % batch.size] += acc;
            }
            for (i, s) in trimmed.iter().enumerate() {
                out.push(sums[i] / (s.len() as f64 * vocab));
            }
        }
        Ok(out)
    }
}

/// Builds a model with parameters drawn deterministically from `config.seed`.
pub fn init_model(config: &ModelConfig, vocab: &Vocabulary) -> Result<AutoEncoderModel> {
    config.validate()?;
    let (params, layout) = build_params(config, vocab.len());
    Ok(AutoEncoderModel {
        config: config.clone(),
        vocab: vocab.clone(),
        params,
        layout,
        history: Vec::new(),
    })
}
