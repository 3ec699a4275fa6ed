//! Negation-aware sentiment classification.
//!
//! This crate implements a cascading multi-task architecture in which a
//! BiLSTM-CRF negation tagger (joint cue + scope BIO labeling) acts as an
//! auxiliary task for sentence-level sentiment classification. The two tasks
//! share an embedding layer and a first BiLSTM; the sentiment head adds a
//! skip connection, a second BiLSTM, max pooling, batch norm, and a softmax
//! layer on top.
//!
//! The crate is organized along the pipeline:
//!
//! * [`corpus`] — corpus ingestion (*SEM-style negation columns, sentiment
//!   TSV, constituency treebanks, generic tagged corpora), joint BIO tag
//!   encoding, vocabularies, and embedding tables.
//! * [`nnet`] — the numerical substrate: LSTM/BiLSTM, linear-chain CRF with
//!   forward-algorithm likelihood and Viterbi decoding, dropout, batch norm,
//!   max pooling, softmax cross-entropy, and Adam. Every trainable operation
//!   has an exact hand-written backward pass; [`nnet::gradcheck`] provides
//!   the central-finite-difference oracle used by the test suite.
//! * [`models`] — the assembled single-task, multi-task, and heuristic-flag
//!   models, plus a binary checkpoint format with bit-exact round-trips.
//! * [`training`] — STL, alternating-epoch MTL, and pretrain-then-fine-tune
//!   transfer training with early stopping and multi-seed aggregation.
//! * [`analysis`] — heuristic negation tagging, silver negated/non-negated
//!   splits, subsampling and corpus-combination ablations, label statistics.
//! * [`eval`] — accuracy, token-level cue/scope F1, and approximate
//!   randomization significance testing.
//!
//! Data-parallel inner loops (seed workers, randomization-test iterations,
//! batch scoring) run on rayon when the default `parallel` feature is
//! enabled and fall back to sequential iteration otherwise; see [`parallel`].

pub mod analysis;
pub mod corpus;
pub mod eval;
pub mod models;
pub mod nnet;
pub mod parallel;
pub mod training;
