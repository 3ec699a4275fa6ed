//! The assembled models.
//!
//! All variants share one skeleton: a trainable embedding table feeding a
//! shared BiLSTM (layer 1). The negation head projects layer-1 states to
//! emission scores for a linear-chain CRF. The sentiment head concatenates
//! the layer-1 input to its output (skip connection), runs a second BiLSTM,
//! max-pools over time, applies batch norm, and ends in a softmax layer.
//! The heuristic variant additionally concatenates a learned two-row
//! negation-flag embedding to the word embeddings before layer 1.
//!
//! Dropout masks are drawn by the caller and passed in as noise, so every
//! forward pass is a deterministic function of (parameters, input, noise);
//! evaluation passes no noise.

pub mod checkpoint;

use ndarray::{s, Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::nnet::{
    self, draw_dropout_mask, max_pool, max_pool_backward, scoped, softmax_ce, softmax_ce_backward,
    BatchNorm, BiLstm, BufferMut, CrfParams, Linear, NnetError, ParamMut, Tensors, P2,
};

pub type Result<T> = std::result::Result<T, NnetError>;

/// Fixed RNG stream ids derived from a run seed; every stochastic consumer
/// owns a stream so that architecture variants draw identical values for
/// the components they share.
pub mod streams {
    pub const SHARED_INIT: u64 = 0;
    pub const SENTIMENT_INIT: u64 = 1;
    pub const NEGATION_INIT: u64 = 2;
    pub const FLAGS_INIT: u64 = 3;
    pub const EMBED_FALLBACK: u64 = 4;
    pub const TRAINING: u64 = 5;
}

/// ChaCha generator for one (seed, stream) pair.
pub fn seed_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModelConfig {
    pub emb_dim: usize,
    pub hidden: usize,
    /// Sentiment classes (2, 3, or 5); ignored by negation-only models.
    pub classes: usize,
    /// Tagging label inventory size (5 for negation BIO).
    pub tag_labels: usize,
    /// Negation-flag embedding width for the heuristic variant.
    pub flag_dim: usize,
    pub dropout_embed: f64,
    pub dropout_skip: f64,
    pub bn_momentum: f64,
    pub bn_eps: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            emb_dim: 300,
            hidden: 100,
            classes: 2,
            tag_labels: 5,
            flag_dim: 50,
            dropout_embed: 0.5,
            dropout_skip: 0.3,
            bn_momentum: 0.1,
            bn_eps: 1e-5,
        }
    }
}

/// Which heads the model carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Arch {
    /// Sentiment path only (the single-task model; still contains layer 1).
    SentimentOnly,
    /// Sentiment path plus the negation head over the shared layer 1.
    MultiTask,
    /// Sentiment path with the heuristic negation-flag embedding.
    Heuristic,
    /// Embeddings + layer 1 + CRF head only (the single-task tagger).
    NegationOnly,
}

impl Arch {
    pub fn has_sentiment(self) -> bool {
        !matches!(self, Arch::NegationOnly)
    }

    pub fn has_negation(self) -> bool {
        matches!(self, Arch::MultiTask | Arch::NegationOnly)
    }

    pub fn has_flags(self) -> bool {
        matches!(self, Arch::Heuristic)
    }
}

/// A lookup table whose rows are trainable.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub table: P2,
}

impl Embedding {
    pub fn new(matrix: Array2<f64>) -> Self {
        Self {
            table: P2::new(matrix),
        }
    }

    pub fn dim(&self) -> usize {
        self.table.v.ncols()
    }

    pub fn rows(&self, ids: &[usize]) -> Array2<f64> {
        let mut out = Array2::zeros((ids.len(), self.dim()));
        for (t, &id) in ids.iter().enumerate() {
            out.row_mut(t).assign(&self.table.v.row(id));
        }
        out
    }

    pub fn backward_rows(&mut self, ids: &[usize], d_out: &Array2<f64>) {
        for (t, &id) in ids.iter().enumerate() {
            let mut row = self.table.g.row_mut(id);
            row += &d_out.row(t);
        }
    }
}

impl Tensors for Embedding {
    fn visit_params(&mut self, prefix: &str, f: &mut dyn FnMut(ParamMut<'_>)) {
        self.table.visit(&scoped(prefix, "table"), f);
    }
}

/// Embedding table plus the shared layer-1 BiLSTM.
#[derive(Debug, Clone)]
pub struct SharedEncoder {
    pub embedding: Embedding,
    pub bilstm: BiLstm,
}

/// Emission projection plus CRF over the tag inventory.
#[derive(Debug, Clone)]
pub struct NegationHead {
    pub emission: Linear,
    pub crf: CrfParams,
}

/// Task BiLSTM over the skip representation, batch norm on the pooled
/// vector, and the softmax projection.
#[derive(Debug, Clone)]
pub struct SentimentHead {
    pub bilstm: BiLstm,
    pub norm: BatchNorm,
    pub out: Linear,
}

#[derive(Debug, Clone)]
pub struct Model {
    pub cfg: ModelConfig,
    pub arch: Arch,
    pub shared: SharedEncoder,
    pub flags: Option<Embedding>,
    pub neg: Option<NegationHead>,
    pub sent: Option<SentimentHead>,
}

impl Model {
    /// Build a model from a materialized embedding matrix. Component
    /// initializations draw from per-component streams of `seed`, so
    /// architectures sharing a component initialize it identically.
    pub fn new(cfg: ModelConfig, arch: Arch, embedding: Array2<f64>, seed: u64) -> Model {
        assert_eq!(embedding.ncols(), cfg.emb_dim, "embedding width");
        let layer1_input = cfg.emb_dim + if arch.has_flags() { cfg.flag_dim } else { 0 };

        let mut shared_rng = seed_stream(seed, streams::SHARED_INIT);
        let shared = SharedEncoder {
            embedding: Embedding::new(embedding),
            bilstm: BiLstm::new(layer1_input, cfg.hidden, &mut shared_rng),
        };

        let flags = arch.has_flags().then(|| {
            let mut rng = seed_stream(seed, streams::FLAGS_INIT);
            Embedding::new(nnet::uniform_array2(2, cfg.flag_dim, 0.1, &mut rng))
        });

        let neg = arch.has_negation().then(|| {
            let mut rng = seed_stream(seed, streams::NEGATION_INIT);
            NegationHead {
                emission: Linear::new(2 * cfg.hidden, cfg.tag_labels, &mut rng),
                crf: CrfParams::new(cfg.tag_labels, &mut rng),
            }
        });

        let sent = arch.has_sentiment().then(|| {
            let mut rng = seed_stream(seed, streams::SENTIMENT_INIT);
            SentimentHead {
                bilstm: BiLstm::new(layer1_input + 2 * cfg.hidden, cfg.hidden, &mut rng),
                norm: BatchNorm::new(2 * cfg.hidden, cfg.bn_momentum, cfg.bn_eps),
                out: Linear::new(2 * cfg.hidden, cfg.classes, &mut rng),
            }
        });

        Model {
            cfg,
            arch,
            shared,
            flags,
            neg,
            sent,
        }
    }

    /// Layer-1 input: word embedding rows, with the flag embedding
    /// concatenated for the heuristic variant.
    fn input_embed(&self, ids: &[usize], flags: Option<&[bool]>) -> Result<Array2<f64>> {
        let words = self.shared.embedding.rows(ids);
        match (&self.flags, flags) {
            (None, None) => Ok(words),
            (None, Some(_)) => Err(NnetError::Usage {
                op: "forward",
                detail: "negation flags passed to a model without a flag embedding".into(),
            }),
            (Some(_), None) => Err(NnetError::Usage {
                op: "forward",
                detail: "heuristic model requires per-token negation flags".into(),
            }),
            (Some(table), Some(flag_seq)) => {
                if flag_seq.len() != ids.len() {
                    return Err(NnetError::ShapeMismatch {
                        op: "forward",
                        detail: format!("{} flags vs {} tokens", flag_seq.len(), ids.len()),
                    });
                }
                let d = self.cfg.emb_dim;
                let fd = self.cfg.flag_dim;
                let mut out = Array2::zeros((ids.len(), d + fd));
                out.slice_mut(s![.., 0..d]).assign(&words);
                for (t, &in_scope) in flag_seq.iter().enumerate() {
                    let row = table.table.v.row(in_scope as usize);
                    out.slice_mut(s![t, d..d + fd]).assign(&row);
                }
                Ok(out)
            }
        }
    }

    fn backward_input_embed(&mut self, ids: &[usize], flags: Option<&[bool]>, d_x: &Array2<f64>) {
        let d = self.cfg.emb_dim;
        let words_grad = d_x.slice(s![.., 0..d]).to_owned();
        self.shared.embedding.backward_rows(ids, &words_grad);
        if let (Some(table), Some(flag_seq)) = (self.flags.as_mut(), flags) {
            for (t, &in_scope) in flag_seq.iter().enumerate() {
                let mut row = table.table.g.row_mut(in_scope as usize);
                row += &d_x.slice(s![t, d..]);
            }
        }
    }

    fn neg_head(&self) -> Result<&NegationHead> {
        self.neg.as_ref().ok_or(NnetError::Usage {
            op: "negation_forward",
            detail: "model has no negation head".into(),
        })
    }

    fn sent_head(&self) -> Result<&SentimentHead> {
        self.sent.as_ref().ok_or(NnetError::Usage {
            op: "sentiment_forward",
            detail: "model has no sentiment head".into(),
        })
    }

    /// Evaluation-mode tagging: Viterbi path and, when gold labels are
    /// given, the CRF negative log-likelihood.
    pub fn negation_forward(
        &self,
        ids: &[usize],
        gold: Option<&[usize]>,
    ) -> Result<(Vec<usize>, Option<f64>)> {
        if ids.is_empty() {
            return Err(NnetError::Usage {
                op: "negation_forward",
                detail: "empty sentence".into(),
            });
        }
        let head = self.neg_head()?;
        let x = self.input_embed(ids, None)?;
        let mask = vec![true; ids.len()];
        let (h1, _) = self.shared.bilstm.forward(&x, &mask)?;
        let emissions = head.emission.forward_seq(&h1);
        let pred = head.crf.viterbi(&emissions)?;
        let loss = match gold {
            Some(g) => Some(head.crf.nll(&emissions, g)?),
            None => None,
        };
        Ok((pred, loss))
    }

    /// Evaluation-mode classification: class probabilities (batch norm uses
    /// running statistics) and, when a gold class is given, cross-entropy.
    pub fn sentiment_forward(
        &self,
        ids: &[usize],
        flags: Option<&[bool]>,
        gold: Option<usize>,
    ) -> Result<(Array1<f64>, Option<f64>)> {
        if ids.is_empty() {
            return Err(NnetError::Usage {
                op: "sentiment_forward",
                detail: "empty sentence".into(),
            });
        }
        let head = self.sent_head()?;
        let x = self.input_embed(ids, flags)?;
        let mask = vec![true; ids.len()];
        let (h1, _) = self.shared.bilstm.forward(&x, &mask)?;
        let skip = concat_cols(&x, &h1);
        let (h2, _) = head.bilstm.forward(&skip, &mask)?;
        let (pool, _) = max_pool(&h2, &mask)?;
        let normed = head
            .norm
            .forward_eval(&pool.clone().insert_axis(ndarray::Axis(0)));
        let logits = head.out.forward(&normed.row(0).to_owned());
        let probs = nnet::softmax(&logits);
        let loss = match gold {
            Some(g) => Some(softmax_ce(&logits, g)?.0),
            None => None,
        };
        Ok((probs, loss))
    }

    /// Deterministic argmax class (lowest index wins ties).
    pub fn predict_class(&self, ids: &[usize], flags: Option<&[bool]>) -> Result<usize> {
        let (probs, _) = self.sentiment_forward(ids, flags, None)?;
        let mut best = 0;
        for k in 1..probs.len() {
            if probs[k] > probs[best] {
                best = k;
            }
        }
        Ok(best)
    }

    /// Training-mode forward/backward for one tagged sentence; accumulates
    /// gradients scaled by `loss_scale` and returns the NLL.
    pub fn negation_train_step(
        &mut self,
        ids: &[usize],
        gold: &[usize],
        noise: &NegNoise,
        loss_scale: f64,
    ) -> Result<f64> {
        if ids.is_empty() {
            return Err(NnetError::Usage {
                op: "negation_train_step",
                detail: "empty sentence".into(),
            });
        }
        self.neg_head()?;
        let mask = vec![true; ids.len()];
        let x0 = self.input_embed(ids, None)?;
        let x = &x0 * &noise.embed;
        let (h1, cache1) = self.shared.bilstm.forward(&x, &mask)?;

        let head = self.neg.as_mut().expect("checked above");
        let emissions = head.emission.forward_seq(&h1);
        let (loss, d_em) = head.crf.nll_backward(&emissions, gold, loss_scale)?;
        let d_h1 = head.emission.backward_seq(&h1, &d_em);
        let d_x = self.shared.bilstm.backward(&x, &cache1, &d_h1);
        let d_x0 = &d_x * &noise.embed;
        self.backward_input_embed(ids, None, &d_x0);
        Ok(loss)
    }

    /// Training-mode forward/backward over a batch of sentences. Batch norm
    /// runs over the pooled sentence representations, so the batch needs at
    /// least two members. Returns the mean cross-entropy.
    pub fn sentiment_train_step(
        &mut self,
        batch: &[SentExample<'_>],
        noises: &[SentNoise],
    ) -> Result<f64> {
        let b = batch.len();
        if b == 0 {
            return Err(NnetError::Usage {
                op: "sentiment_train_step",
                detail: "empty batch".into(),
            });
        }
        if noises.len() != b {
            return Err(NnetError::ShapeMismatch {
                op: "sentiment_train_step",
                detail: format!("{} noise entries vs {} examples", noises.len(), b),
            });
        }
        self.sent_head()?;
        let two_h = 2 * self.cfg.hidden;

        struct ExCache {
            x: Array2<f64>,
            cache1: crate::nnet::BiLstmCache,
            skip: Array2<f64>,
            cache2: crate::nnet::BiLstmCache,
            argmax: Vec<usize>,
            n: usize,
        }

        let mut caches = Vec::with_capacity(b);
        let mut pooled = Array2::zeros((b, two_h));
        for (k, ex) in batch.iter().enumerate() {
            if ex.ids.is_empty() {
                return Err(NnetError::Usage {
                    op: "sentiment_train_step",
                    detail: "empty sentence".into(),
                });
            }
            let mask = vec![true; ex.ids.len()];
            let x0 = self.input_embed(ex.ids, ex.flags)?;
            let x = &x0 * &noises[k].embed;
            let (h1, cache1) = self.shared.bilstm.forward(&x, &mask)?;
            let skip0 = concat_cols(&x, &h1);
            let skip = &skip0 * &noises[k].skip;
            let head = self.sent.as_ref().expect("checked above");
            let (h2, cache2) = head.bilstm.forward(&skip, &mask)?;
            let (pool, argmax) = max_pool(&h2, &mask)?;
            pooled.row_mut(k).assign(&pool);
            caches.push(ExCache {
                x,
                cache1,
                skip,
                cache2,
                argmax,
                n: ex.ids.len(),
            });
        }

        let head = self.sent.as_mut().expect("checked above");
        let (normed, bn_cache) = head.norm.forward_train(&pooled)?;
        let mut loss = 0.0;
        let mut d_logits = Array2::zeros((b, self.cfg.classes));
        for (k, ex) in batch.iter().enumerate() {
            let logits = head.out.forward(&normed.row(k).to_owned());
            let (ce, probs) = softmax_ce(&logits, ex.gold)?;
            loss += ce / b as f64;
            let d = softmax_ce_backward(&probs, ex.gold) / b as f64;
            d_logits.row_mut(k).assign(&d);
        }

        let d_normed = head.out.backward_seq(&normed, &d_logits);
        let d_pooled = head.norm.backward(&bn_cache, &d_normed);

        for (k, ex) in batch.iter().enumerate() {
            let cache = &caches[k];
            let d_h2 = max_pool_backward(&d_pooled.row(k).to_owned(), &cache.argmax, cache.n);
            let head = self.sent.as_mut().expect("checked above");
            let d_skip = head.bilstm.backward(&cache.skip, &cache.cache2, &d_h2);
            let d_skip0 = &d_skip * &noises[k].skip;
            let din = cache.x.ncols();
            let d_x_direct = d_skip0.slice(s![.., 0..din]).to_owned();
            let d_h1 = d_skip0.slice(s![.., din..din + two_h]).to_owned();
            let mut d_x = self.shared.bilstm.backward(&cache.x, &cache.cache1, &d_h1);
            d_x += &d_x_direct;
            let d_x0 = &d_x * &noises[k].embed;
            self.backward_input_embed(ex.ids, ex.flags, &d_x0);
        }
        Ok(loss)
    }
}

/// One training example for the sentiment path.
#[derive(Debug, Clone, Copy)]
pub struct SentExample<'a> {
    pub ids: &'a [usize],
    /// Heuristic in-scope flags; required iff the model is the heuristic
    /// variant. Cue tokens count as in scope.
    pub flags: Option<&'a [bool]>,
    pub gold: usize,
}

/// Dropout masks for one sentence through the negation path.
pub struct NegNoise {
    pub embed: Array2<f64>,
}

/// Dropout masks for one sentence through the sentiment path.
pub struct SentNoise {
    pub embed: Array2<f64>,
    pub skip: Array2<f64>,
}

impl NegNoise {
    /// Identity noise (evaluation or dropout-free configs).
    pub fn ones(n: usize, model: &Model) -> Self {
        Self {
            embed: Array2::ones((n, model.layer1_input_dim())),
        }
    }

    pub fn draw(n: usize, model: &Model, rng: &mut ChaCha8Rng) -> Self {
        Self {
            embed: draw_dropout_mask(n, model.layer1_input_dim(), model.cfg.dropout_embed, rng),
        }
    }
}

impl SentNoise {
    pub fn ones(n: usize, model: &Model) -> Self {
        let din = model.layer1_input_dim();
        Self {
            embed: Array2::ones((n, din)),
            skip: Array2::ones((n, din + 2 * model.cfg.hidden)),
        }
    }

    pub fn draw(n: usize, model: &Model, rng: &mut ChaCha8Rng) -> Self {
        let din = model.layer1_input_dim();
        Self {
            embed: draw_dropout_mask(n, din, model.cfg.dropout_embed, rng),
            skip: draw_dropout_mask(n, din + 2 * model.cfg.hidden, model.cfg.dropout_skip, rng),
        }
    }
}

impl Model {
    pub fn layer1_input_dim(&self) -> usize {
        self.cfg.emb_dim + if self.arch.has_flags() { self.cfg.flag_dim } else { 0 }
    }

    /// Scalar parameter count of the sentiment path (everything except the
    /// negation head).
    pub fn sentiment_path_params(&mut self) -> usize {
        nnet::param_count_filtered(self, |name| !name.starts_with("neg."))
    }
}

fn concat_cols(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let (n, da) = a.dim();
    let db = b.ncols();
    let mut out = Array2::zeros((n, da + db));
    out.slice_mut(s![.., 0..da]).assign(a);
    out.slice_mut(s![.., da..da + db]).assign(b);
    out
}

impl Tensors for Model {
    fn visit_params(&mut self, prefix: &str, f: &mut dyn FnMut(ParamMut<'_>)) {
        self.shared.embedding.visit_params(&scoped(prefix, "embed"), f);
        self.shared.bilstm.visit_params(&scoped(prefix, "shared"), f);
        if let Some(flags) = self.flags.as_mut() {
            flags.visit_params(&scoped(prefix, "flags"), f);
        }
        if let Some(neg) = self.neg.as_mut() {
            neg.emission.visit_params(&scoped(prefix, "neg.emission"), f);
            neg.crf.visit_params(&scoped(prefix, "neg.crf"), f);
        }
        if let Some(sent) = self.sent.as_mut() {
            sent.bilstm.visit_params(&scoped(prefix, "sent.lstm"), f);
            sent.norm.visit_params(&scoped(prefix, "sent.norm"), f);
            sent.out.visit_params(&scoped(prefix, "sent.out"), f);
        }
    }

    fn visit_buffers(&mut self, prefix: &str, f: &mut dyn FnMut(BufferMut<'_>)) {
        if let Some(sent) = self.sent.as_mut() {
            sent.norm.visit_buffers(&scoped(prefix, "sent.norm"), f);
        }
    }
}
