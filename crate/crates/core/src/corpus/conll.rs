//! *SEM-2012 style column format for negation annotations.
//!
//! One token per line, blank line between sentences, tab-separated columns:
//!
//! ```text
//! source  sent_id  tok_id  word  lemma  pos  syntax  [negation columns]
//! ```
//!
//! For a sentence without negation the single negation column holds `***`.
//! Otherwise there are three columns per negation instance — cue, scope,
//! event — each holding `_` for "not part of this instance" or a (sub)token
//! string. The event column is accepted and ignored. A token whose cue
//! column is filled is recorded as a cue token; an affixal cue marks the
//! whole token as cue, and any scope mark on the same token is subsumed by
//! the cue.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{CorpusError, CorpusId, NegInstance, NegSentence, Result};

const NO_NEGATION: &str = "***";
const EMPTY: &str = "_";
const META_COLS: usize = 7;

/// Load a negation corpus in the column format described above.
pub fn load_negation_conll(path: impl AsRef<Path>, corpus_id: CorpusId) -> Result<Vec<NegSentence>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = BufReader::new(file);

    let mut sentences = Vec::new();
    let mut block: Vec<(usize, Vec<String>)> = Vec::new();
    let mut line_no = 0usize;
    for line in reader.lines() {
        line_no += 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            if !block.is_empty() {
                sentences.push(parse_block(path, &block, &corpus_id)?);
                block.clear();
            }
            continue;
        }
        let cols: Vec<String> = line.split('\t').map(String::from).collect();
        block.push((line_no, cols));
    }
    if !block.is_empty() {
        sentences.push(parse_block(path, &block, &corpus_id)?);
    }
    Ok(sentences)
}

/// Load an SFU split that has been normalized to the column format by the
/// `prepare` step.
pub fn load_negation_sfu(path: impl AsRef<Path>) -> Result<Vec<NegSentence>> {
    load_negation_conll(path, CorpusId::Sfu)
}

fn parse_block(
    path: &Path,
    block: &[(usize, Vec<String>)],
    corpus_id: &CorpusId,
) -> Result<NegSentence> {
    let first_line = block[0].0;
    let mut instance_count: Option<usize> = None;
    let mut tokens = Vec::with_capacity(block.len());

    // first pass: establish the per-sentence instance count and the tokens
    for (line_no, cols) in block {
        if cols.len() < META_COLS + 1 {
            return Err(CorpusError::parse(
                path,
                *line_no,
                format!("expected at least {} columns, found {}", META_COLS + 1, cols.len()),
            ));
        }
        let word = cols[3].trim();
        if word.is_empty() {
            return Err(CorpusError::parse(path, *line_no, "empty token surface"));
        }
        tokens.push(word.to_string());

        let count = if cols.len() == META_COLS + 1 && cols[META_COLS] == NO_NEGATION {
            0
        } else {
            let neg_cols = cols.len() - META_COLS;
            if neg_cols % 3 != 0 {
                return Err(CorpusError::parse(
                    path,
                    *line_no,
                    format!("negation columns ({neg_cols}) are not cue/scope/event triples"),
                ));
            }
            neg_cols / 3
        };
        match instance_count {
            None => instance_count = Some(count),
            Some(expected) if expected != count => {
                return Err(CorpusError::parse(
                    path,
                    *line_no,
                    format!(
                        "inconsistent negation columns: sentence starting at line {first_line} has {expected} instance(s), this line has {count}"
                    ),
                ));
            }
            _ => {}
        }
    }

    let count = instance_count.unwrap_or(0);
    let mut instances = Vec::with_capacity(count);
    for inst in 0..count {
        let mut cue = Vec::new();
        let mut scope = Vec::new();
        for (tok_idx, (_, cols)) in block.iter().enumerate() {
            let base = META_COLS + 3 * inst;
            if cols[base] != EMPTY {
                cue.push(tok_idx);
            }
            if cols[base + 1] != EMPTY {
                scope.push(tok_idx);
            }
        }
        if cue.is_empty() {
            return Err(CorpusError::parse(
                path,
                first_line,
                format!("negation instance {} has an empty cue", inst + 1),
            ));
        }
        instances.push(NegInstance::new(cue, scope));
    }

    Ok(NegSentence::new(tokens, instances, corpus_id.clone()))
}

/// Write sentences back out in the column format. Lemma/POS/syntax columns
/// are filled with `_`; cue and scope cells carry the token surface.
pub fn write_negation_conll(
    sentences: &[NegSentence],
    path: impl AsRef<Path>,
) -> std::io::Result<()> {
    let path = path.as_ref();
    let mut out = std::io::BufWriter::new(File::create(path)?);
    for (sent_id, sentence) in sentences.iter().enumerate() {
        for token in &sentence.tokens {
            let mut cols: Vec<String> = vec![
                sentence.corpus_id.to_string(),
                sent_id.to_string(),
                token.index.to_string(),
                token.surface.clone(),
                EMPTY.to_string(),
                EMPTY.to_string(),
                EMPTY.to_string(),
            ];
            if sentence.instances.is_empty() {
                cols.push(NO_NEGATION.to_string());
            } else {
                for inst in &sentence.instances {
                    let cue = if inst.cue_tokens.contains(&token.index) {
                        token.surface.clone()
                    } else {
                        EMPTY.to_string()
                    };
                    let scope = if inst.scope_tokens.contains(&token.index) {
                        token.surface.clone()
                    } else {
                        EMPTY.to_string()
                    };
                    cols.push(cue);
                    cols.push(scope);
                    cols.push(EMPTY.to_string());
                }
            }
            writeln!(out, "{}", cols.join("\t"))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn meta(word: &str, idx: usize) -> String {
        format!("ch1\t0\t{idx}\t{word}\t_\t_\t_")
    }

    #[test]
    fn sentence_with_all_columns_empty_has_no_instances() {
        let content = format!("{}\t***\n{}\t***\n\n", meta("Hello", 0), meta("world", 1));
        let f = write_tmp(&content);
        let sents = load_negation_conll(f.path(), CorpusId::Cd).unwrap();
        assert_eq!(sents.len(), 1);
        assert!(sents[0].instances.is_empty());
        assert_eq!(sents[0].surfaces(), vec!["Hello", "world"]);
    }

    #[test]
    fn two_instance_sentence_recovers_exact_index_sets() {
        // "There is no flowery dialog , and time is n't wasted ." with
        // instance 1: cue {2} scope {3,4}; instance 2: cue {8,9} scope {10}
        let words = [
            "There", "is", "no", "flowery", "dialog", ",", "and", "time", "is", "n't", "wasted",
            ".",
        ];
        let mut content = String::new();
        for (i, w) in words.iter().enumerate() {
            let inst1 = match i {
                2 => (w.to_string(), EMPTY.to_string()),
                3 | 4 => (EMPTY.to_string(), w.to_string()),
                _ => (EMPTY.to_string(), EMPTY.to_string()),
            };
            let inst2 = match i {
                8 | 9 => (w.to_string(), EMPTY.to_string()),
                10 => (EMPTY.to_string(), w.to_string()),
                _ => (EMPTY.to_string(), EMPTY.to_string()),
            };
            content.push_str(&format!(
                "{}\t{}\t{}\t_\t{}\t{}\t_\n",
                meta(w, i),
                inst1.0,
                inst1.1,
                inst2.0,
                inst2.1
            ));
        }
        content.push('\n');
        let f = write_tmp(&content);
        let sents = load_negation_conll(f.path(), CorpusId::Cd).unwrap();
        assert_eq!(sents.len(), 1);
        let s = &sents[0];
        assert_eq!(s.instances.len(), 2);
        assert_eq!(s.instances[0].cue_tokens.iter().copied().collect::<Vec<_>>(), vec![2]);
        assert_eq!(
            s.instances[0].scope_tokens.iter().copied().collect::<Vec<_>>(),
            vec![3, 4]
        );
        assert_eq!(
            s.instances[1].cue_tokens.iter().copied().collect::<Vec<_>>(),
            vec![8, 9]
        );
        assert_eq!(
            s.instances[1].scope_tokens.iter().copied().collect::<Vec<_>>(),
            vec![10]
        );
    }

    #[test]
    fn empty_file_yields_empty_list() {
        let f = write_tmp("");
        assert!(load_negation_sfu(f.path()).unwrap().is_empty());
    }

    #[test]
    fn malformed_column_count_names_the_line() {
        let content = format!("{}\t***\nch1\t0\n\n", meta("ok", 0));
        let f = write_tmp(&content);
        let err = load_negation_conll(f.path(), CorpusId::Cd).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(":2:"), "error should name line 2: {msg}");
    }

    #[test]
    fn inconsistent_instance_columns_are_rejected() {
        let content = format!(
            "{}\tno\t_\t_\n{}\t***\n\n",
            meta("no", 0),
            meta("way", 1)
        );
        let f = write_tmp(&content);
        let err = load_negation_conll(f.path(), CorpusId::Cd).unwrap_err();
        assert!(err.to_string().contains("inconsistent negation columns"));
    }

    #[test]
    fn affixal_cue_and_scope_on_the_same_token_stays_cue_only() {
        // "impossible" carries cue "im" and scope remainder "possible"
        let content = format!("{}\tim\tpossible\t_\n\n", meta("impossible", 0));
        let f = write_tmp(&content);
        let sents = load_negation_conll(f.path(), CorpusId::Cd).unwrap();
        let inst = &sents[0].instances[0];
        assert!(inst.cue_tokens.contains(&0));
        assert!(inst.scope_tokens.is_empty());
    }

    #[test]
    fn writer_round_trips_through_the_parser() {
        let original = vec![
            NegSentence::new(
                vec!["not".into(), "good".into(), ".".into()],
                vec![NegInstance::new([0], [1])],
                CorpusId::Sfu,
            ),
            NegSentence::new(vec!["fine".into(), ".".into()], vec![], CorpusId::Sfu),
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("round.sem");
        write_negation_conll(&original, &path).unwrap();
        let loaded = load_negation_sfu(&path).unwrap();
        assert_eq!(loaded, original);
    }
}
