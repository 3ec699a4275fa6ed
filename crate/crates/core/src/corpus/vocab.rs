//! Token vocabulary with reserved PAD and UNK ids.

use std::collections::HashMap;

use super::{CorpusError, Result};

pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    fn with_reserved() -> Self {
        let mut v = Vocabulary {
            tokens: Vec::new(),
            index: HashMap::new(),
        };
        v.push(PAD_TOKEN.to_string());
        v.push(UNK_TOKEN.to_string());
        v
    }

    fn push(&mut self, token: String) -> usize {
        let id = self.tokens.len();
        self.index.insert(token.clone(), id);
        self.tokens.push(token);
        id
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Lookup used everywhere tokens meet the embedding table: exact match,
    /// then lowercase, then UNK.
    pub fn lookup(&self, token: &str) -> usize {
        if let Some(id) = self.id(token) {
            return id;
        }
        if let Some(id) = self.id(&token.to_lowercase()) {
            return id;
        }
        UNK_ID
    }

    pub fn encode(&self, tokens: &[impl AsRef<str>]) -> Vec<usize> {
        tokens.iter().map(|t| self.lookup(t.as_ref())).collect()
    }

    /// Rebuild from a stored token list (checkpoint loading).
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < 2 || tokens[PAD_ID] != PAD_TOKEN || tokens[UNK_ID] != UNK_TOKEN {
            return Err(CorpusError::Usage(
                "vocabulary token list must start with the reserved PAD and UNK entries".into(),
            ));
        }
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Ok(Self { tokens, index })
    }
}

/// Build a vocabulary over token sequences. Tokens appearing at least
/// `min_count` times are kept, in first-occurrence order after the reserved
/// PAD and UNK entries.
pub fn build_vocab<'a, I, S>(corpora: I, min_count: usize) -> Result<Vocabulary>
where
    I: IntoIterator<Item = &'a [S]> + Clone,
    S: AsRef<str> + 'a,
{
    if min_count < 1 {
        return Err(CorpusError::Usage("min_count must be >= 1".into()));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for seq in corpora.clone() {
        for token in seq {
            *counts.entry(token.as_ref()).or_insert(0) += 1;
        }
    }
    let mut vocab = Vocabulary::with_reserved();
    for seq in corpora {
        for token in seq {
            let t = token.as_ref();
            if counts[t] >= min_count && vocab.id(t).is_none() {
                vocab.push(t.to_string());
            }
        }
    }
    Ok(vocab)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn min_count_two_keeps_only_repeated_tokens() {
        let seq = toks("a a b");
        let vocab = build_vocab([seq.as_slice()], 2).unwrap();
        assert_eq!(vocab.len(), 3);
        assert_eq!(vocab.id("a"), Some(2));
        assert_eq!(vocab.id("b"), None);
    }

    #[test]
    fn five_distinct_tokens_give_size_seven() {
        let seq = toks("v w x y z");
        let vocab = build_vocab([seq.as_slice()], 1).unwrap();
        assert_eq!(vocab.len(), 7);
    }

    #[test]
    fn empty_corpus_keeps_only_reserved_ids() {
        let vocab = build_vocab(std::iter::empty::<&[String]>(), 1).unwrap();
        assert_eq!(vocab.len(), 2);
        assert_eq!(vocab.token(PAD_ID), Some(PAD_TOKEN));
        assert_eq!(vocab.token(UNK_ID), Some(UNK_TOKEN));
    }

    #[test]
    fn lookup_falls_back_to_lowercase_then_unk() {
        let seq = toks("Great movie");
        let vocab = build_vocab([seq.as_slice()], 1).unwrap();
        assert_eq!(vocab.lookup("Great"), vocab.id("Great").unwrap());
        assert_eq!(vocab.lookup("MOVIE"), vocab.id("movie").unwrap());
        assert_eq!(vocab.lookup("unseen"), UNK_ID);
    }

    #[test]
    fn ids_are_dense_and_unique() {
        let a = toks("x y x z");
        let b = toks("y q");
        let vocab = build_vocab([a.as_slice(), b.as_slice()], 1).unwrap();
        for id in 0..vocab.len() {
            let t = vocab.token(id).unwrap();
            assert_eq!(vocab.id(t), Some(id));
        }
    }
}
