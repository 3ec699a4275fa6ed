//! Corpus ingestion and encoding.
//!
//! Negation corpora arrive in a *SEM-style column format (see [`conll`]);
//! the SFU review corpus is first normalized into that format by [`sfu`].
//! Sentiment data comes either as label-TAB-tokens lines or as constituency
//! treebanks with an integer sentiment label at every node. [`bio`] turns
//! negation annotations into the joint five-label cue/scope BIO encoding
//! used by the tagger.

pub mod bio;
pub mod conll;
pub mod embeddings;
pub mod sentiment;
pub mod sfu;
pub mod tagged;
pub mod treebank;
pub mod vocab;

pub use bio::{tag_sets, to_bio, NegLabel, TagSequence};
pub use conll::{load_negation_conll, load_negation_sfu, write_negation_conll};
pub use embeddings::{load_embeddings, EmbeddingSource, EmbeddingTable};
pub use sentiment::{
    load_sentiment, to_binary, Granularity, LabelScheme, SentLabel, SentimentExample, Unit,
};
pub use tagged::{load_tagged_tsv, TaggedCorpus, TaggedSentence};
pub use treebank::{extract_phrases, parse_tree, PhraseTree};
pub use vocab::{build_vocab, Vocabulary, PAD_ID, UNK_ID};

use std::collections::BTreeSet;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl CorpusError {
    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        CorpusError::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, CorpusError>;

/// A single token with its zero-based position in the sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub index: usize,
}

/// One negation instance: the cue's token indices and the (possibly
/// discontinuous, possibly empty) scope token indices. The two sets are
/// disjoint; both annotation schemes used here exclude the cue from its
/// scope.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NegInstance {
    pub cue_tokens: BTreeSet<usize>,
    pub scope_tokens: BTreeSet<usize>,
}

impl NegInstance {
    /// Build an instance; tokens claimed by the cue are dropped from the
    /// scope set so the disjointness invariant holds by construction.
    pub fn new(
        cue: impl IntoIterator<Item = usize>,
        scope: impl IntoIterator<Item = usize>,
    ) -> Self {
        let cue_tokens: BTreeSet<usize> = cue.into_iter().collect();
        let scope_tokens = scope
            .into_iter()
            .filter(|i| !cue_tokens.contains(i))
            .collect();
        Self {
            cue_tokens,
            scope_tokens,
        }
    }
}

/// Identifies which corpus a sentence came from; annotation schemes differ,
/// so provenance is retained through combination.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum CorpusId {
    Sfu,
    Cd,
    Other(String),
}

impl std::fmt::Display for CorpusId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CorpusId::Sfu => write!(f, "sfu"),
            CorpusId::Cd => write!(f, "cd"),
            CorpusId::Other(s) => write!(f, "{s}"),
        }
    }
}

/// A tokenized sentence with zero or more negation instances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NegSentence {
    pub tokens: Vec<Token>,
    pub instances: Vec<NegInstance>,
    pub corpus_id: CorpusId,
}

impl NegSentence {
    pub fn new(tokens: Vec<String>, instances: Vec<NegInstance>, corpus_id: CorpusId) -> Self {
        let tokens = tokens
            .into_iter()
            .enumerate()
            .map(|(index, surface)| Token { surface, index })
            .collect();
        Self {
            tokens,
            instances,
            corpus_id,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn is_negated(&self) -> bool {
        !self.instances.is_empty()
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.surface.as_str()).collect()
    }
}
