//! Generic two-column tagged corpora (token<TAB>tag, blank line between
//! sentences), used for the non-negation auxiliary tasks.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::{CorpusError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedSentence {
    pub tokens: Vec<String>,
    pub tags: Vec<String>,
}

/// A tagged corpus with its label inventory. Tags are sorted, except that
/// `O` (when present) is hoisted to index 0 so BIO-style corpora keep the
/// outside label at the index the decoder tie-break favors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedCorpus {
    pub sentences: Vec<TaggedSentence>,
    pub inventory: Vec<String>,
}

impl TaggedCorpus {
    pub fn from_sentences(sentences: Vec<TaggedSentence>) -> Self {
        let mut inventory: Vec<String> = sentences
            .iter()
            .flat_map(|s| s.tags.iter().cloned())
            .collect();
        inventory.sort();
        inventory.dedup();
        if let Some(pos) = inventory.iter().position(|t| t == "O") {
            inventory.remove(pos);
            inventory.insert(0, "O".to_string());
        }
        Self {
            sentences,
            inventory,
        }
    }

    pub fn tag_index(&self, tag: &str) -> Option<usize> {
        self.inventory.iter().position(|t| t == tag)
    }

    /// Tag-id sequences aligned with [`Self::sentences`].
    pub fn tag_ids(&self) -> Vec<Vec<usize>> {
        self.sentences
            .iter()
            .map(|s| {
                s.tags
                    .iter()
                    .map(|t| self.tag_index(t).expect("tag in inventory"))
                    .collect()
            })
            .collect()
    }
}

/// Load a two-column corpus.
pub fn load_tagged_tsv(path: impl AsRef<Path>) -> Result<TaggedCorpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = BufReader::new(file);

    let mut sentences = Vec::new();
    let mut tokens = Vec::new();
    let mut tags = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let trimmed = line.trim_end();
        if trimmed.is_empty() {
            if !tokens.is_empty() {
                sentences.push(TaggedSentence {
                    tokens: std::mem::take(&mut tokens),
                    tags: std::mem::take(&mut tags),
                });
            }
            continue;
        }
        let (token, tag) = trimmed.split_once('\t').ok_or_else(|| {
            CorpusError::parse(path, line_no, "expected 'token<TAB>tag'")
        })?;
        if token.is_empty() || tag.is_empty() {
            return Err(CorpusError::parse(path, line_no, "empty token or tag"));
        }
        tokens.push(token.to_string());
        tags.push(tag.to_string());
    }
    if !tokens.is_empty() {
        sentences.push(TaggedSentence { tokens, tags });
    }
    Ok(TaggedCorpus::from_sentences(sentences))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    #[test]
    fn loads_sentences_and_builds_inventory_with_o_first() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(b"the\tDET\ncat\tNOUN\n\nran\tVERB\nout\tO\n")
            .unwrap();
        let corpus = load_tagged_tsv(f.path()).unwrap();
        assert_eq!(corpus.sentences.len(), 2);
        assert_eq!(corpus.inventory[0], "O");
        assert_eq!(corpus.inventory.len(), 4);
        let ids = corpus.tag_ids();
        assert_eq!(ids[1][1], 0);
    }

    #[test]
    fn missing_tab_is_a_parse_error() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(b"token_without_tag\n").unwrap();
        assert!(load_tagged_tsv(f.path()).is_err());
    }
}
