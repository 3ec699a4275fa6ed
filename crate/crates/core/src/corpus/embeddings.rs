//! Pre-trained word embeddings.
//!
//! The text format is one `token v1 ... vd` line per vector. A two-field
//! all-numeric first line is treated as a word2vec-style `count dim` header
//! and skipped. Vocabulary entries missing from the file are initialized
//! uniformly in (-0.1, 0.1) from the run's seed; the PAD row is all zeros.

use ndarray::Array2;
use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::vocab::{Vocabulary, PAD_ID};
use super::{CorpusError, Result};

/// An embedding matrix aligned with a vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub matrix: Array2<f64>,
    pub dim: usize,
}

/// Raw token vectors parsed from a file, reusable across runs; each run
/// materializes its own table so the random fallback rows come from the
/// run's seed.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingSource {
    pub vectors: HashMap<String, Vec<f64>>,
    pub dim: usize,
}

impl EmbeddingSource {
    /// Parse an embedding file, keeping only vectors for tokens that can be
    /// reached from `vocab` (exact or lowercase form).
    pub fn read(path: impl AsRef<Path>, vocab: &Vocabulary, dim: usize) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let reader = BufReader::new(file);

        let mut vectors = HashMap::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|source| CorpusError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let token = fields.next().expect("nonempty line");
            let values: Vec<&str> = fields.collect();
            if line_no == 1 && values.len() == 1 && token.parse::<usize>().is_ok() {
                // word2vec header: "<count> <dim>"
                continue;
            }
            if values.len() != dim {
                return Err(CorpusError::parse(
                    path,
                    line_no,
                    format!("vector has {} values, expected dim {}", values.len(), dim),
                ));
            }
            // only keep rows the vocabulary can use
            if vocab.id(token).is_none() && vocab.id(&token.to_lowercase()).is_none() {
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> =
                values.iter().map(|v| v.parse::<f64>()).collect();
            let parsed = parsed.map_err(|e| {
                CorpusError::parse(path, line_no, format!("bad float in vector: {e}"))
            })?;
            vectors.insert(token.to_string(), parsed);
        }
        Ok(Self { vectors, dim })
    }

    /// Materialize a table for `vocab`: file vector when present (exact
    /// match first, then lowercase), otherwise uniform(-0.1, 0.1) from
    /// `rng`. Fallback rows are drawn in vocabulary-id order.
    pub fn materialize(&self, vocab: &Vocabulary, rng: &mut ChaCha8Rng) -> EmbeddingTable {
        let mut matrix = Array2::zeros((vocab.len(), self.dim));
        for id in 0..vocab.len() {
            if id == PAD_ID {
                continue;
            }
            let token = vocab.token(id).expect("id in range");
            let found = self
                .vectors
                .get(token)
                .or_else(|| self.vectors.get(&token.to_lowercase()));
            match found {
                Some(vec) => {
                    for (j, &v) in vec.iter().enumerate() {
                        matrix[[id, j]] = v;
                    }
                }
                None => {
                    for j in 0..self.dim {
                        matrix[[id, j]] = rng.random_range(-0.1..0.1);
                    }
                }
            }
        }
        EmbeddingTable {
            matrix,
            dim: self.dim,
        }
    }

    /// A source with no file vectors: every row falls back to random init.
    pub fn random_only(dim: usize) -> Self {
        Self {
            vectors: HashMap::new(),
            dim,
        }
    }
}

/// Read a file and materialize the table in one call.
pub fn load_embeddings(
    path: impl AsRef<Path>,
    vocab: &Vocabulary,
    dim: usize,
    rng: &mut ChaCha8Rng,
) -> Result<EmbeddingTable> {
    Ok(EmbeddingSource::read(path, vocab, dim)?.materialize(vocab, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::vocab::build_vocab;
    use rand::SeedableRng;
    use std::io::Write as _;

    fn vocab_of(s: &str) -> Vocabulary {
        let toks: Vec<String> = s.split_whitespace().map(String::from).collect();
        build_vocab([toks.as_slice()], 1).unwrap()
    }

    #[test]
    fn file_vectors_are_used_verbatim() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "good 0.25 -0.5 0.125").unwrap();
        writeln!(f, "bad 1.0 2.0 3.0").unwrap();
        let vocab = vocab_of("good bad");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let table = load_embeddings(f.path(), &vocab, 3, &mut rng).unwrap();
        let id = vocab.id("good").unwrap();
        assert_eq!(
            (0..3).map(|j| table.matrix[[id, j]]).collect::<Vec<_>>(),
            vec![0.25, -0.5, 0.125]
        );
    }

    #[test]
    fn pad_row_is_all_zeros() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "x 1 1").unwrap();
        let vocab = vocab_of("x");
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let table = load_embeddings(f.path(), &vocab, 2, &mut rng).unwrap();
        assert!(table.matrix.row(PAD_ID).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn missing_tokens_get_seeded_uniform_rows() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "x 1 1").unwrap();
        let vocab = vocab_of("x unseen");
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        let t1 = load_embeddings(f.path(), &vocab, 2, &mut a).unwrap();
        let t2 = load_embeddings(f.path(), &vocab, 2, &mut b).unwrap();
        assert_eq!(t1, t2);
        let id = vocab.id("unseen").unwrap();
        for j in 0..2 {
            let v = t1.matrix[[id, j]];
            assert!(v != 0.0 && (-0.1..0.1).contains(&v));
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "x 1 2 3").unwrap();
        let vocab = vocab_of("x");
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert!(load_embeddings(f.path(), &vocab, 2, &mut rng).is_err());
    }

    #[test]
    fn word2vec_header_is_skipped() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "2 3").unwrap();
        writeln!(f, "x 1 2 3").unwrap();
        let vocab = vocab_of("x");
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let table = load_embeddings(f.path(), &vocab, 3, &mut rng).unwrap();
        assert_eq!(table.matrix[[vocab.id("x").unwrap(), 2]], 3.0);
    }
}
