//! Heuristic negation tagging, silver splits, and dataset ablation helpers.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::path::Path;

use crate::corpus::{NegLabel, NegSentence, SentimentExample, TagSequence};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("{0}")]
    Usage(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, AnalysisError>;

/// Punctuation that terminates a heuristic negation scope.
pub const SCOPE_PUNCTUATION: [&str; 6] = [".", ",", ";", ":", "!", "?"];

fn is_scope_punct(token: &str) -> bool {
    SCOPE_PUNCTUATION.contains(&token)
}

/// Cue strings harvested from negation annotations. Multi-token cues are
/// kept as token sequences; matching is lowercased and greedy left-to-right
/// with the longest entry winning.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CueLexicon {
    entries: BTreeSet<Vec<String>>,
    max_len: usize,
}

impl CueLexicon {
    pub fn from_entries(entries: impl IntoIterator<Item = Vec<String>>) -> Result<Self> {
        let entries: BTreeSet<Vec<String>> = entries
            .into_iter()
            .map(|e| e.into_iter().map(|t| t.to_lowercase()).collect::<Vec<_>>())
            .filter(|e: &Vec<String>| !e.is_empty())
            .collect();
        if entries.is_empty() {
            return Err(AnalysisError::Usage("cue lexicon is empty".into()));
        }
        let max_len = entries.iter().map(Vec::len).max().unwrap_or(1);
        Ok(Self { entries, max_len })
    }

    /// Harvest cue entries from annotated sentences: every contiguous run
    /// of cue tokens within an instance becomes one lexicon entry.
    pub fn harvest(sentences: &[NegSentence]) -> Result<Self> {
        let mut entries = Vec::new();
        for sentence in sentences {
            for inst in &sentence.instances {
                let mut run: Vec<String> = Vec::new();
                let mut prev: Option<usize> = None;
                for &idx in &inst.cue_tokens {
                    if prev.is_some_and(|p| idx != p + 1) && !run.is_empty() {
                        entries.push(std::mem::take(&mut run));
                    }
                    run.push(sentence.tokens[idx].surface.to_lowercase());
                    prev = Some(idx);
                }
                if !run.is_empty() {
                    entries.push(run);
                }
            }
        }
        Self::from_entries(entries)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &Vec<String>> {
        self.entries.iter()
    }

    /// One cue per line, tokens space-separated.
    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(|source| {
            AnalysisError::Io {
                path: path.to_path_buf(),
                source,
            }
        })?);
        for entry in &self.entries {
            writeln!(out, "{}", entry.join(" ")).map_err(|source| AnalysisError::Io {
                path: path.to_path_buf(),
                source,
            })?;
        }
        Ok(())
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| AnalysisError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut entries = Vec::new();
        for line in std::io::BufReader::new(file).lines() {
            let line = line.map_err(|source| AnalysisError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            let toks: Vec<String> = line.split_whitespace().map(String::from).collect();
            if !toks.is_empty() {
                entries.push(toks);
            }
        }
        Self::from_entries(entries)
    }

    /// Greedy left-to-right longest-match cue spans as (start, len).
    pub fn match_spans(&self, tokens: &[impl AsRef<str>]) -> Vec<(usize, usize)> {
        let lowered: Vec<String> = tokens.iter().map(|t| t.as_ref().to_lowercase()).collect();
        let mut spans = Vec::new();
        let mut at = 0;
        while at < lowered.len() {
            let mut matched = 0;
            let longest = self.max_len.min(lowered.len() - at);
            for len in (1..=longest).rev() {
                if self.entries.contains(&lowered[at..at + len]) {
                    matched = len;
                    break;
                }
            }
            if matched > 0 {
                spans.push((at, matched));
                at += matched;
            } else {
                at += 1;
            }
        }
        spans
    }

    pub fn contains_cue(&self, tokens: &[impl AsRef<str>]) -> bool {
        !self.match_spans(tokens).is_empty()
    }
}

/// Per-token flag from the heuristic tagger.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeurFlag {
    Cue,
    InScope,
    Out,
}

/// Heuristic negation tagging: lexicon matches are cues, and every token
/// strictly after a cue up to (exclusive) the next punctuation token is in
/// scope.
pub fn heur_tag(tokens: &[impl AsRef<str>], lexicon: &CueLexicon) -> Vec<HeurFlag> {
    let n = tokens.len();
    let mut flags = vec![HeurFlag::Out; n];
    for (start, len) in lexicon.match_spans(tokens) {
        for f in flags.iter_mut().skip(start).take(len) {
            *f = HeurFlag::Cue;
        }
        let mut at = start + len;
        while at < n && !is_scope_punct(tokens[at].as_ref()) {
            if flags[at] == HeurFlag::Out {
                flags[at] = HeurFlag::InScope;
            }
            at += 1;
        }
    }
    flags
}

/// Partition a test set into (negated, non-negated) by lexicon cue presence.
pub fn silver_split(
    examples: Vec<SentimentExample>,
    lexicon: &CueLexicon,
) -> (Vec<SentimentExample>, Vec<SentimentExample>) {
    examples
        .into_iter()
        .partition(|e| lexicon.contains_cue(&e.tokens))
}

/// Index-level variant of [`silver_split`] for wiring into stored
/// prediction files.
pub fn silver_split_indices(
    examples: &[SentimentExample],
    lexicon: &CueLexicon,
) -> (Vec<usize>, Vec<usize>) {
    let mut negated = Vec::new();
    let mut plain = Vec::new();
    for (i, e) in examples.iter().enumerate() {
        if lexicon.contains_cue(&e.tokens) {
            negated.push(i);
        } else {
            plain.push(i);
        }
    }
    (negated, plain)
}

/// Uniform random subset without replacement, deterministic in (n, seed).
/// The subset keeps the original relative order.
pub fn subsample<T: Clone>(data: &[T], n: usize, seed: u64) -> Result<Vec<T>> {
    if n == 0 || n > data.len() {
        return Err(AnalysisError::Usage(format!(
            "cannot sample {n} items from {}",
            data.len()
        )));
    }
    let mut indices: Vec<usize> = (0..data.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let mut chosen: Vec<usize> = indices.into_iter().take(n).collect();
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|i| data[i].clone()).collect())
}

/// Concatenate two corpora, preserving per-sentence provenance and order
/// (all of `a` before all of `b`).
pub fn combine_corpora(a: Vec<NegSentence>, b: Vec<NegSentence>) -> Vec<NegSentence> {
    let mut out = a;
    out.extend(b);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum LabelFilter {
    CuesOnly,
    ScopesOnly,
}

/// Drop one label category from a tag sequence (dropped labels become O).
/// The kept category's runs are untouched, so the output stays well-formed.
pub fn filter_labels(tags: &TagSequence, keep: LabelFilter) -> TagSequence {
    tags.iter()
        .map(|&label| match keep {
            LabelFilter::CuesOnly if label.is_scope() => NegLabel::O,
            LabelFilter::ScopesOnly if label.is_cue() => NegLabel::O,
            _ => label,
        })
        .collect()
}

/// Distributional statistics of a tag corpus's label frequencies.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DatasetStats {
    /// Shannon entropy of the token-label distribution, in nats.
    pub entropy: f64,
    /// Fisher excess kurtosis of the label relative-frequency vector
    /// (population moments over the per-label frequencies).
    pub kurtosis: f64,
    pub label_counts: BTreeMap<String, usize>,
    pub total_tokens: usize,
}

/// Compute stats over token-label sequences. `inventory` fixes the label
/// set (zero-count labels included); pass the observed labels when there is
/// no declared inventory.
pub fn dataset_stats<S: AsRef<str>>(
    sequences: &[Vec<S>],
    inventory: &[String],
) -> Result<DatasetStats> {
    let mut counts: BTreeMap<String, usize> =
        inventory.iter().map(|l| (l.clone(), 0)).collect();
    let mut total = 0usize;
    for seq in sequences {
        for label in seq {
            let l = label.as_ref();
            match counts.get_mut(l) {
                Some(c) => *c += 1,
                None => {
                    return Err(AnalysisError::Usage(format!(
                        "label '{l}' not in declared inventory"
                    )))
                }
            }
            total += 1;
        }
    }
    if total == 0 {
        return Err(AnalysisError::Usage("empty corpus".into()));
    }
    let freqs: Vec<f64> = counts.values().map(|&c| c as f64 / total as f64).collect();
    let entropy = -freqs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>();

    let k = freqs.len() as f64;
    let mean = freqs.iter().sum::<f64>() / k;
    let m2 = freqs.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / k;
    let m4 = freqs.iter().map(|p| (p - mean).powi(4)).sum::<f64>() / k;
    let kurtosis = if m2 > 0.0 { m4 / (m2 * m2) - 3.0 } else { 0.0 };

    Ok(DatasetStats {
        entropy,
        kurtosis,
        label_counts: counts,
        total_tokens: total,
    })
}

/// Stats for negation corpora via their BIO encoding.
pub fn negation_stats(sentences: &[NegSentence]) -> Result<DatasetStats> {
    let inventory: Vec<String> = NegLabel::ALL.iter().map(|l| l.as_str().to_string()).collect();
    let sequences: Vec<Vec<&'static str>> = sentences
        .iter()
        .map(|s| crate::corpus::to_bio(s).iter().map(|l| l.as_str()).collect())
        .collect();
    dataset_stats(&sequences, &inventory)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CorpusId, Granularity, NegInstance, SentLabel, Unit};

    fn lex(items: &[&str]) -> CueLexicon {
        CueLexicon::from_entries(
            items
                .iter()
                .map(|s| s.split_whitespace().map(String::from).collect::<Vec<_>>()),
        )
        .unwrap()
    }

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn heur_scope_runs_to_next_punctuation() {
        let flags = heur_tag(&toks("not good at all ."), &lex(&["not"]));
        assert_eq!(
            flags,
            vec![
                HeurFlag::Cue,
                HeurFlag::InScope,
                HeurFlag::InScope,
                HeurFlag::InScope,
                HeurFlag::Out
            ]
        );
    }

    #[test]
    fn no_lexicon_cue_means_all_out() {
        let flags = heur_tag(&toks("very nice movie !"), &lex(&["not", "no"]));
        assert!(flags.iter().all(|&f| f == HeurFlag::Out));
    }

    #[test]
    fn cue_immediately_before_punctuation_has_empty_scope() {
        let flags = heur_tag(&toks("why not ?"), &lex(&["not"]));
        assert_eq!(flags, vec![HeurFlag::Out, HeurFlag::Cue, HeurFlag::Out]);
    }

    #[test]
    fn multi_token_cues_match_greedily() {
        let lexicon = lex(&["no", "no matter"]);
        let flags = heur_tag(&toks("no matter what , fine"), &lexicon);
        assert_eq!(flags[0], HeurFlag::Cue);
        assert_eq!(flags[1], HeurFlag::Cue);
        assert_eq!(flags[2], HeurFlag::InScope);
        assert_eq!(flags[3], HeurFlag::Out);
    }

    #[test]
    fn harvest_splits_discontinuous_cues_into_runs() {
        let s = NegSentence::new(
            toks("neither here nor there"),
            vec![NegInstance::new([0, 2], [1, 3])],
            CorpusId::Sfu,
        );
        let lexicon = CueLexicon::harvest(&[s]).unwrap();
        let entries: Vec<String> = lexicon.entries().map(|e| e.join(" ")).collect();
        assert_eq!(entries, vec!["neither", "nor"]);
    }

    fn example(tokens: &str) -> SentimentExample {
        SentimentExample {
            tokens: toks(tokens),
            label: SentLabel::Pos,
            granularity: Granularity::Binary,
            unit: Unit::Sentence,
        }
    }

    #[test]
    fn silver_split_is_a_partition() {
        let lexicon = lex(&["not"]);
        let examples = vec![
            example("not bad"),
            example("pretty good"),
            example("it is not great"),
        ];
        let (neg, plain) = silver_split(examples.clone(), &lexicon);
        assert_eq!(neg.len() + plain.len(), examples.len());
        assert_eq!(neg.len(), 2);
        let (neg_idx, plain_idx) = silver_split_indices(&examples, &lexicon);
        assert_eq!(neg_idx, vec![0, 2]);
        assert_eq!(plain_idx, vec![1]);
    }

    #[test]
    fn silver_split_of_empty_set_is_empty() {
        let lexicon = lex(&["not"]);
        let (neg, plain) = silver_split(Vec::new(), &lexicon);
        assert!(neg.is_empty() && plain.is_empty());
    }

    #[test]
    fn subsample_invariants() {
        let data: Vec<u32> = (0..50).collect();
        let full = subsample(&data, 50, 1).unwrap();
        assert_eq!(full, data);
        let a = subsample(&data, 10, 7).unwrap();
        let b = subsample(&data, 10, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 10);
        assert!(a.iter().all(|x| data.contains(x)));
        assert!(subsample(&data, 51, 1).is_err());
        assert!(subsample(&data, 0, 1).is_err());
    }

    #[test]
    fn combine_preserves_order_and_provenance() {
        let a = vec![NegSentence::new(toks("a"), vec![], CorpusId::Sfu)];
        let b = vec![NegSentence::new(toks("b"), vec![], CorpusId::Cd)];
        let combined = combine_corpora(a.clone(), b);
        assert_eq!(combined.len(), 2);
        assert_eq!(combined[0].corpus_id, CorpusId::Sfu);
        assert_eq!(combined[1].corpus_id, CorpusId::Cd);
        let only_a = combine_corpora(a.clone(), Vec::new());
        assert_eq!(only_a, a);
    }

    fn tagseq(s: &str) -> TagSequence {
        s.split_whitespace()
            .map(|t| NegLabel::parse(t).unwrap())
            .collect()
    }

    #[test]
    fn cues_only_filter_on_the_two_instance_example() {
        let tags = tagseq("O O B-Cue B-Scope I-Scope O O O B-Cue I-Cue B-Scope O");
        let filtered = filter_labels(&tags, LabelFilter::CuesOnly);
        assert_eq!(
            filtered,
            tagseq("O O B-Cue O O O O O B-Cue I-Cue O O")
        );
        // idempotent
        assert_eq!(filter_labels(&filtered, LabelFilter::CuesOnly), filtered);
        // all-O stays all-O
        let all_o = tagseq("O O O");
        assert_eq!(filter_labels(&all_o, LabelFilter::ScopesOnly), all_o);
    }

    #[test]
    fn entropy_of_single_label_corpus_is_zero() {
        let stats = dataset_stats(&[vec!["O", "O", "O"]], &["O".to_string()]).unwrap();
        assert_eq!(stats.entropy, 0.0);
    }

    #[test]
    fn entropy_of_even_two_label_corpus_is_ln_two() {
        let inv = vec!["A".to_string(), "B".to_string()];
        let stats = dataset_stats(&[vec!["A", "B", "A", "B"]], &inv).unwrap();
        assert!((stats.entropy - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let inv = vec!["A".to_string()];
        assert!(dataset_stats::<&str>(&[], &inv).is_err());
    }
}
