//! Training protocols: single-task sentiment (STL), alternating-epoch
//! multi-task (MTL), the heuristic-flag baseline, single-task negation
//! tagging, and pretrain-then-fine-tune transfer.
//!
//! Every run is fully determined by (seed, config, data). A run owns a
//! ChaCha stream per stochastic consumer (see [`crate::models::streams`]):
//! parameter initialization draws per component, so architectures that
//! share a component initialize it identically, and all training-time
//! stochasticity (epoch shuffles, dropout masks) comes from the training
//! stream in a fixed order. Each meta-epoch runs the main task first, then
//! the auxiliary task, and evaluates the development set afterwards; the
//! best-development epoch's parameters (earliest on ties) are restored for
//! test evaluation.

mod batcher;

pub use batcher::make_batches;

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::analysis::{heur_tag, CueLexicon, HeurFlag, LabelFilter};
use crate::corpus::{
    to_bio, NegLabel, NegSentence, SentimentExample, TaggedCorpus, Vocabulary,
};
use crate::eval::{self, NegCategory, Prf};
use crate::models::{
    seed_stream, streams, Arch, Model, ModelConfig, NegNoise, SentExample, SentNoise,
};
use crate::nnet::{
    copy_params_by_name, restore, snapshot, zero_grads, Adam, AdamConfig, NnetError,
};
use crate::parallel;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Nnet(#[from] NnetError),
    #[error(transparent)]
    Eval(#[from] crate::eval::EvalError),
}

pub type Result<T> = std::result::Result<T, TrainError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainMode {
    Stl,
    Mtl,
    Heur,
    Transfer,
    /// Single-task negation tagger (transfer stage 1 run standalone).
    NegStl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AuxLabelFilter {
    #[default]
    Both,
    CuesOnly,
    ScopesOnly,
}

impl AuxLabelFilter {
    pub fn as_label_filter(self) -> Option<LabelFilter> {
        match self {
            AuxLabelFilter::Both => None,
            AuxLabelFilter::CuesOnly => Some(LabelFilter::CuesOnly),
            AuxLabelFilter::ScopesOnly => Some(LabelFilter::ScopesOnly),
        }
    }
}

/// Hyperparameters shared by all training protocols.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    /// Fine-tuning rate for transfer stage 2.
    pub reduced_lr: f64,
    pub dropout_in: f64,
    pub dropout_between: f64,
    pub l2: f64,
    pub batch_size: usize,
    pub seeds: Vec<u64>,
    pub mode: TrainMode,
    pub aux_filter: AuxLabelFilter,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            lr: 0.001,
            reduced_lr: 0.0001,
            dropout_in: 0.5,
            dropout_between: 0.3,
            l2: 0.0001,
            batch_size: 32,
            seeds: vec![1, 2, 3, 4, 5],
            mode: TrainMode::Stl,
            aux_filter: AuxLabelFilter::Both,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(TrainError::Usage("epochs must be >= 1".into()));
        }
        for (name, rate) in [
            ("dropout_in", self.dropout_in),
            ("dropout_between", self.dropout_between),
        ] {
            if !(0.0..1.0).contains(&rate) {
                return Err(TrainError::Usage(format!("{name} must be in [0, 1)")));
            }
        }
        if self.seeds.is_empty() {
            return Err(TrainError::Usage("at least one seed is required".into()));
        }
        Ok(())
    }

    fn adam(&self, lr: f64) -> AdamConfig {
        AdamConfig {
            lr,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
            l2: self.l2,
        }
    }

    /// Model dropout rates come from the train config.
    pub fn apply_to_model(&self, mut cfg: ModelConfig) -> ModelConfig {
        cfg.dropout_embed = self.dropout_in;
        cfg.dropout_skip = self.dropout_between;
        cfg
    }
}

/// One encoded sentiment example.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedSent {
    pub ids: Vec<usize>,
    pub gold: usize,
    /// Heuristic in-scope flags (cue tokens count as in scope); present only
    /// for the heuristic variant.
    pub flags: Option<Vec<bool>>,
}

/// Encoded sentiment task with its splits and class inventory.
#[derive(Debug, Clone, Default)]
pub struct SentData {
    pub train: Vec<EncodedSent>,
    pub dev: Vec<EncodedSent>,
    pub test: Vec<EncodedSent>,
    pub label_names: Vec<String>,
}

impl SentData {
    pub fn classes(&self) -> usize {
        self.label_names.len()
    }
}

/// One encoded tagging example.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedTagged {
    pub ids: Vec<usize>,
    pub tags: Vec<usize>,
}

/// Encoded tagging task (negation BIO or a generic auxiliary corpus).
#[derive(Debug, Clone, Default)]
pub struct AuxData {
    pub train: Vec<EncodedTagged>,
    pub dev: Vec<EncodedTagged>,
    pub test: Vec<EncodedTagged>,
    pub inventory: Vec<String>,
}

impl AuxData {
    pub fn labels(&self) -> usize {
        self.inventory.len()
    }

    /// True when the inventory is exactly the joint cue/scope BIO set, which
    /// enables cue/scope F1 reporting.
    pub fn is_negation_inventory(&self) -> bool {
        self.inventory.len() == NegLabel::COUNT
            && NegLabel::ALL
                .iter()
                .zip(&self.inventory)
                .all(|(l, s)| l.as_str() == s)
    }
}

/// Encode sentiment examples against a vocabulary; `lexicon` adds heuristic
/// flags for the heuristic variant.
pub fn encode_sentiment(
    examples: &[SentimentExample],
    class_of: impl Fn(&SentimentExample) -> usize,
    vocab: &Vocabulary,
    lexicon: Option<&CueLexicon>,
) -> Vec<EncodedSent> {
    examples
        .iter()
        .map(|e| EncodedSent {
            ids: vocab.encode(&e.tokens),
            gold: class_of(e),
            flags: lexicon.map(|lex| {
                heur_tag(&e.tokens, lex)
                    .into_iter()
                    .map(|f| f != HeurFlag::Out)
                    .collect()
            }),
        })
        .collect()
}

/// Encode negation sentences as BIO tag-id sequences, optionally dropping
/// one label category.
pub fn encode_negation(
    sentences: &[NegSentence],
    vocab: &Vocabulary,
    filter: Option<LabelFilter>,
) -> Vec<EncodedTagged> {
    sentences
        .iter()
        .map(|s| {
            let tags = to_bio(s);
            let tags = match filter {
                Some(f) => crate::analysis::filter_labels(&tags, f),
                None => tags,
            };
            EncodedTagged {
                ids: vocab.encode(&s.surfaces()),
                tags: tags.iter().map(|l| l.index()).collect(),
            }
        })
        .collect()
}

/// The negation BIO inventory as label strings.
pub fn negation_inventory() -> Vec<String> {
    NegLabel::ALL.iter().map(|l| l.as_str().to_string()).collect()
}

/// Encode a generic tagged corpus split against a shared inventory.
pub fn encode_tagged(corpus: &TaggedCorpus, inventory: &[String], vocab: &Vocabulary) -> Result<Vec<EncodedTagged>> {
    corpus
        .sentences
        .iter()
        .map(|s| {
            let tags = s
                .tags
                .iter()
                .map(|t| {
                    inventory
                        .iter()
                        .position(|i| i == t)
                        .ok_or_else(|| TrainError::Usage(format!("tag '{t}' missing from inventory")))
                })
                .collect::<Result<Vec<usize>>>()?;
            Ok(EncodedTagged {
                ids: vocab.encode(&s.tokens),
                tags,
            })
        })
        .collect()
}

/// Token-level evaluation of the tagger on encoded data.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AuxEval {
    pub cue: Prf,
    pub scope: Prf,
    pub combined: Prf,
}

/// One seeded run's bookkeeping. The selected epoch is the earliest argmax
/// of the development metric; test numbers come from that epoch's
/// parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub mode: TrainMode,
    /// Development metric per epoch (accuracy; combined token F1 for the
    /// negation-only tagger). Exactly `epochs` entries.
    pub dev_metric: Vec<f64>,
    /// 1-based epoch whose parameters produced the test numbers.
    pub selected_epoch: usize,
    /// Main test metric: accuracy, or combined token F1 for `NegStl`.
    pub test_accuracy: f64,
    pub per_class_accuracy: BTreeMap<String, f64>,
    /// One prediction per test example, stable example order.
    pub test_predictions: Vec<String>,
    pub test_golds: Vec<String>,
    /// Tagger quality on the auxiliary test set, when one exists and uses
    /// the negation inventory.
    pub aux_f1: Option<AuxEval>,
}

/// Mean and sample standard deviation over per-seed test metrics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregateResult {
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub std: f64,
    pub per_seed: Vec<f64>,
}

/// Aggregate at least two runs.
pub fn aggregate_runs(results: &[RunResult]) -> Result<AggregateResult> {
    let metrics: Vec<f64> = results.iter().map(|r| r.test_accuracy).collect();
    aggregate_values(&metrics)
}

/// Aggregate raw metric values (mean / sample std).
pub fn aggregate_values(metrics: &[f64]) -> Result<AggregateResult> {
    if metrics.len() < 2 {
        return Err(TrainError::Usage(format!(
            "aggregation needs at least 2 runs, got {}",
            metrics.len()
        )));
    }
    let n = metrics.len() as f64;
    let mean = metrics.iter().sum::<f64>() / n;
    let var = metrics.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / (n - 1.0);
    Ok(AggregateResult {
        mean,
        std: var.sqrt(),
        per_seed: metrics.to_vec(),
    })
}

fn sentiment_filter(name: &str) -> bool {
    !name.starts_with("neg.")
}

fn negation_filter(name: &str) -> bool {
    !name.starts_with("sent.")
}

/// One pass over the sentiment training data.
fn run_sent_epoch(
    model: &mut Model,
    adam: &mut Adam,
    train: &[EncodedSent],
    batch_size: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<f64> {
    let lengths: Vec<usize> = train.iter().map(|e| e.ids.len()).collect();
    let batches = make_batches(&lengths, batch_size, rng, true);
    let mut total = 0.0;
    for batch in &batches {
        if batch.len() < 2 {
            return Err(TrainError::Usage(
                "sentiment training needs at least two examples per batch for batch norm".into(),
            ));
        }
        zero_grads(model);
        let mut noises = Vec::with_capacity(batch.len());
        for &i in batch {
            noises.push(SentNoise::draw(train[i].ids.len(), model, rng));
        }
        let examples: Vec<SentExample<'_>> = batch
            .iter()
            .map(|&i| SentExample {
                ids: &train[i].ids,
                flags: train[i].flags.as_deref(),
                gold: train[i].gold,
            })
            .collect();
        total += model.sentiment_train_step(&examples, &noises)? * batch.len() as f64;
        adam.step_filtered(model, sentiment_filter);
    }
    Ok(total / train.len() as f64)
}

/// One pass over the auxiliary tagging data. Exactly
/// ceil(|aux| / batch_size) gradient steps; no upsampling or resizing.
fn run_aux_epoch(
    model: &mut Model,
    adam: &mut Adam,
    train: &[EncodedTagged],
    batch_size: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<f64> {
    let lengths: Vec<usize> = train.iter().map(|e| e.ids.len()).collect();
    let batches = make_batches(&lengths, batch_size, rng, false);
    let mut total = 0.0;
    for batch in &batches {
        zero_grads(model);
        let scale = 1.0 / batch.len() as f64;
        for &i in batch {
            let noise = NegNoise::draw(train[i].ids.len(), model, rng);
            total += model.negation_train_step(&train[i].ids, &train[i].tags, &noise, scale)?;
        }
        adam.step_filtered(model, negation_filter);
    }
    Ok(total / train.len() as f64)
}

/// Evaluation-mode class predictions in stable example order.
pub fn predict_classes(model: &Model, data: &[EncodedSent]) -> Result<Vec<usize>> {
    let preds = parallel::map(data, |e| model.predict_class(&e.ids, e.flags.as_deref()));
    preds.into_iter().map(|p| p.map_err(TrainError::from)).collect()
}

/// Evaluation-mode tag predictions paired with gold tags.
pub fn predict_tags(model: &Model, data: &[EncodedTagged]) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    let preds = parallel::map(data, |e| {
        model
            .negation_forward(&e.ids, None)
            .map(|(pred, _)| (pred, e.tags.clone()))
    });
    preds.into_iter().map(|p| p.map_err(TrainError::from)).collect()
}

fn sent_dev_accuracy(model: &Model, data: &[EncodedSent]) -> Result<f64> {
    let preds = predict_classes(model, data)?;
    let golds: Vec<usize> = data.iter().map(|e| e.gold).collect();
    Ok(eval::accuracy(&preds, &golds)?)
}

fn id_pairs_to_labels(pairs: &[(Vec<usize>, Vec<usize>)]) -> Vec<(Vec<NegLabel>, Vec<NegLabel>)> {
    pairs
        .iter()
        .map(|(p, g)| {
            (
                p.iter().map(|&i| NegLabel::from_index(i).expect("label index")).collect(),
                g.iter().map(|&i| NegLabel::from_index(i).expect("label index")).collect(),
            )
        })
        .collect()
}

fn aux_eval(model: &Model, data: &[EncodedTagged]) -> Result<AuxEval> {
    let pairs = id_pairs_to_labels(&predict_tags(model, data)?);
    Ok(AuxEval {
        cue: eval::token_f1(&pairs, NegCategory::Cue)?,
        scope: eval::token_f1(&pairs, NegCategory::Scope)?,
        combined: eval::token_f1_combined(&pairs)?,
    })
}

/// Earliest argmax (1-based epoch number).
fn select_best_epoch(dev_metric: &[f64]) -> usize {
    let mut best = 0;
    for (i, &m) in dev_metric.iter().enumerate() {
        if m > dev_metric[best] {
            best = i;
        }
    }
    best + 1
}

struct EpochTracker {
    dev_metric: Vec<f64>,
    best_snapshot: Option<Vec<f64>>,
}

impl EpochTracker {
    fn new() -> Self {
        Self {
            dev_metric: Vec::new(),
            best_snapshot: None,
        }
    }

    fn record(&mut self, model: &mut Model, metric: f64) {
        let improved = self
            .dev_metric
            .iter()
            .all(|&m| metric > m);
        self.dev_metric.push(metric);
        if improved || self.best_snapshot.is_none() {
            self.best_snapshot = Some(snapshot(model));
        }
    }

    fn restore_best(self, model: &mut Model) -> (Vec<f64>, usize) {
        restore(model, &self.best_snapshot.expect("at least one epoch"));
        let best = select_best_epoch(&self.dev_metric);
        (self.dev_metric, best)
    }
}

/// Shared driver for STL / HEUR / MTL sentiment training and transfer
/// stage 2. `aux` is the auxiliary task for MTL; `init_from` copies the
/// embedding table and shared BiLSTM parameters from a pretrained model
/// before training starts.
#[allow(clippy::too_many_arguments)]
fn train_sentiment_driver(
    cfg: &TrainConfig,
    arch: Arch,
    model_cfg: ModelConfig,
    embedding: ndarray::Array2<f64>,
    data: &SentData,
    aux: Option<&AuxData>,
    init_from: Option<&mut Model>,
    seed: u64,
    lr: f64,
    mode: TrainMode,
) -> Result<(RunResult, Model)> {
    cfg.validate()?;
    if data.train.is_empty() {
        return Err(TrainError::Usage("empty training set".into()));
    }
    if data.dev.is_empty() || data.test.is_empty() {
        return Err(TrainError::Usage("dev and test splits must be non-empty".into()));
    }
    if data.train.len() < 2 {
        return Err(TrainError::Usage(
            "sentiment training needs at least two examples (batch norm)".into(),
        ));
    }

    let mut model = Model::new(cfg.apply_to_model(model_cfg), arch, embedding, seed);
    if let Some(src) = init_from {
        let copied = copy_params_by_name(&mut model, src, |name| {
            name.starts_with("embed.") || name.starts_with("shared.")
        });
        assert!(copied > 0, "transfer initialization copied nothing");
    }

    let aux_nonempty = match aux {
        Some(a) if a.train.is_empty() => {
            log::warn!("auxiliary training set is empty; multi-task run degrades to single-task");
            None
        }
        other => other,
    };

    let mut adam = Adam::new(cfg.adam(lr));
    let mut train_rng = seed_stream(seed, streams::TRAINING);
    let mut tracker = EpochTracker::new();
    for _epoch in 1..=cfg.epochs {
        run_sent_epoch(&mut model, &mut adam, &data.train, cfg.batch_size, &mut train_rng)?;
        if let Some(a) = aux_nonempty {
            run_aux_epoch(&mut model, &mut adam, &a.train, cfg.batch_size, &mut train_rng)?;
        }
        let dev = sent_dev_accuracy(&model, &data.dev)?;
        tracker.record(&mut model, dev);
    }
    let (dev_metric, selected_epoch) = tracker.restore_best(&mut model);

    let preds = predict_classes(&model, &data.test)?;
    let golds: Vec<usize> = data.test.iter().map(|e| e.gold).collect();
    let test_accuracy = eval::accuracy(&preds, &golds)?;
    let name_of = |c: usize| data.label_names[c].clone();
    let pred_names: Vec<String> = preds.iter().map(|&c| name_of(c)).collect();
    let gold_names: Vec<String> = golds.iter().map(|&c| name_of(c)).collect();
    let per_class = eval::per_class_accuracy(&pred_names, &gold_names)?;

    let aux_f1 = match aux_nonempty {
        Some(a) if a.is_negation_inventory() && !a.test.is_empty() => Some(aux_eval(&model, &a.test)?),
        _ => None,
    };

    Ok((
        RunResult {
            seed,
            mode,
            dev_metric,
            selected_epoch,
            test_accuracy,
            per_class_accuracy: per_class,
            test_predictions: pred_names,
            test_golds: gold_names,
            aux_f1,
        },
        model,
    ))
}

/// Single-task sentiment training. The model still contains the shared
/// layer-1 BiLSTM (supervised by sentiment only), so STL and MTL sentiment
/// paths have identical capacity.
pub fn train_stl(
    cfg: &TrainConfig,
    model_cfg: ModelConfig,
    embedding: ndarray::Array2<f64>,
    data: &SentData,
    seed: u64,
) -> Result<(RunResult, Model)> {
    train_sentiment_driver(
        cfg,
        Arch::SentimentOnly,
        model_cfg,
        embedding,
        data,
        None,
        None,
        seed,
        cfg.lr,
        TrainMode::Stl,
    )
}

/// The heuristic baseline: STL plus a learned negation-flag embedding;
/// `data` must carry per-token flags.
pub fn train_heur(
    cfg: &TrainConfig,
    model_cfg: ModelConfig,
    embedding: ndarray::Array2<f64>,
    data: &SentData,
    seed: u64,
) -> Result<(RunResult, Model)> {
    if data.train.iter().any(|e| e.flags.is_none()) {
        return Err(TrainError::Usage(
            "heuristic training requires per-token negation flags".into(),
        ));
    }
    train_sentiment_driver(
        cfg,
        Arch::Heuristic,
        model_cfg,
        embedding,
        data,
        None,
        None,
        seed,
        cfg.lr,
        TrainMode::Heur,
    )
}

/// Alternating-epoch multi-task training: per meta-epoch one full pass over
/// the main task, then one full pass over the auxiliary task, as-is (no
/// upsampling). Early stopping watches main-task development accuracy. An
/// empty auxiliary set degrades to STL with a warning.
pub fn train_mtl(
    cfg: &TrainConfig,
    model_cfg: ModelConfig,
    embedding: ndarray::Array2<f64>,
    data: &SentData,
    aux: &AuxData,
    seed: u64,
) -> Result<(RunResult, Model)> {
    let mut model_cfg = model_cfg;
    model_cfg.tag_labels = aux.labels().max(1);
    train_sentiment_driver(
        cfg,
        Arch::MultiTask,
        model_cfg,
        embedding,
        data,
        Some(aux),
        None,
        seed,
        cfg.lr,
        TrainMode::Mtl,
    )
}

/// Single-task negation tagging (transfer stage 1). The development and
/// test metrics are combined token F1 over cue and scope positives.
pub fn train_negation(
    cfg: &TrainConfig,
    model_cfg: ModelConfig,
    embedding: ndarray::Array2<f64>,
    aux: &AuxData,
    seed: u64,
) -> Result<(RunResult, Model)> {
    cfg.validate()?;
    if aux.train.is_empty() {
        return Err(TrainError::Usage("empty negation training set".into()));
    }
    if aux.dev.is_empty() || aux.test.is_empty() {
        return Err(TrainError::Usage("dev and test splits must be non-empty".into()));
    }
    let mut model_cfg = cfg.apply_to_model(model_cfg);
    model_cfg.tag_labels = aux.labels().max(1);
    let mut model = Model::new(model_cfg, Arch::NegationOnly, embedding, seed);
    let mut adam = Adam::new(cfg.adam(cfg.lr));
    let mut train_rng = seed_stream(seed, streams::TRAINING);
    let mut tracker = EpochTracker::new();
    let negation_labels = aux.is_negation_inventory();
    for _epoch in 1..=cfg.epochs {
        run_aux_epoch(&mut model, &mut adam, &aux.train, cfg.batch_size, &mut train_rng)?;
        let dev = if negation_labels {
            aux_eval(&model, &aux.dev)?.combined.f1
        } else {
            tag_token_accuracy(&model, &aux.dev)?
        };
        tracker.record(&mut model, dev);
    }
    let (dev_metric, selected_epoch) = tracker.restore_best(&mut model);

    let pairs = predict_tags(&model, &aux.test)?;
    let (test_accuracy, aux_f1, per_class) = if negation_labels {
        let f1 = {
            let labeled = id_pairs_to_labels(&pairs);
            AuxEval {
                cue: eval::token_f1(&labeled, NegCategory::Cue)?,
                scope: eval::token_f1(&labeled, NegCategory::Scope)?,
                combined: eval::token_f1_combined(&labeled)?,
            }
        };
        let mut per_class = BTreeMap::new();
        per_class.insert("cue-f1".to_string(), f1.cue.f1);
        per_class.insert("scope-f1".to_string(), f1.scope.f1);
        (f1.combined.f1, Some(f1), per_class)
    } else {
        let acc = token_accuracy_of_pairs(&pairs);
        (acc, None, BTreeMap::new())
    };

    let fmt = |ids: &[usize]| {
        ids.iter()
            .map(|&i| aux.inventory[i].clone())
            .collect::<Vec<_>>()
            .join(" ")
    };
    let test_predictions: Vec<String> = pairs.iter().map(|(p, _)| fmt(p)).collect();
    let test_golds: Vec<String> = pairs.iter().map(|(_, g)| fmt(g)).collect();

    Ok((
        RunResult {
            seed,
            mode: TrainMode::NegStl,
            dev_metric,
            selected_epoch,
            test_accuracy,
            per_class_accuracy: per_class,
            test_predictions,
            test_golds,
            aux_f1,
        },
        model,
    ))
}

fn token_accuracy_of_pairs(pairs: &[(Vec<usize>, Vec<usize>)]) -> f64 {
    let mut hit = 0usize;
    let mut total = 0usize;
    for (p, g) in pairs {
        for (a, b) in p.iter().zip(g) {
            hit += (a == b) as usize;
            total += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        hit as f64 / total as f64
    }
}

fn tag_token_accuracy(model: &Model, data: &[EncodedTagged]) -> Result<f64> {
    Ok(token_accuracy_of_pairs(&predict_tags(model, data)?))
}

/// Transfer training outcome: the stage-1 tagger run, the stage-2 sentiment
/// run, and the final sentiment model.
pub struct TransferRun {
    pub negation: RunResult,
    pub sentiment: RunResult,
    pub model: Model,
}

/// Transfer learning: stage 1 trains the negation tagger to its best
/// development token F1; stage 2 initializes a fresh sentiment model's
/// embedding and shared BiLSTM from it and fine-tunes the whole sentiment
/// path at the reduced learning rate, with sentiment supervision only.
/// Batch-norm state belongs to the freshly initialized sentiment head.
pub fn train_transfer(
    cfg: &TrainConfig,
    model_cfg: ModelConfig,
    embedding: ndarray::Array2<f64>,
    aux: &AuxData,
    data: &SentData,
    seed: u64,
) -> Result<TransferRun> {
    let (negation, mut stage1) =
        train_negation(cfg, model_cfg.clone(), embedding.clone(), aux, seed).map_err(|e| {
            TrainError::Usage(format!("transfer stage 1 (negation pretraining) failed: {e}"))
        })?;
    let (sentiment, model) = train_sentiment_driver(
        cfg,
        Arch::SentimentOnly,
        model_cfg,
        embedding,
        data,
        None,
        Some(&mut stage1),
        seed,
        cfg.reduced_lr,
        TrainMode::Transfer,
    )?;
    Ok(TransferRun {
        negation,
        sentiment,
        model,
    })
}

/// Run one closure per seed (in parallel when enabled), preserving seed
/// order in the output.
pub fn run_seeds<R, F>(seeds: &[u64], f: F) -> Vec<Result<R>>
where
    R: Send,
    F: Fn(u64) -> Result<R> + Sync + Send,
{
    parallel::map(seeds, |&s| f(s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregate_matches_hand_arithmetic() {
        let agg = aggregate_values(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(agg.mean, 3.0);
        assert!((agg.std - 1.5811388300841898).abs() < 1e-12);
        let same = aggregate_values(&[2.5, 2.5, 2.5]).unwrap();
        assert_eq!(same.std, 0.0);
        assert!(aggregate_values(&[1.0]).is_err());
    }

    #[test]
    fn best_epoch_is_earliest_argmax() {
        assert_eq!(select_best_epoch(&[0.1, 0.9, 0.3]), 2);
        assert_eq!(select_best_epoch(&[0.5, 0.5, 0.5]), 1);
        assert_eq!(select_best_epoch(&[0.1, 0.4, 0.4, 0.6]), 4);
    }

    #[test]
    fn config_validation_catches_bad_rates() {
        let mut cfg = TrainConfig::default();
        cfg.dropout_in = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = TrainConfig::default();
        cfg.epochs = 0;
        assert!(cfg.validate().is_err());
        assert!(TrainConfig::default().validate().is_ok());
    }
}
