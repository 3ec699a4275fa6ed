//! Sentiment datasets: labeled sentences, tweets, and treebank phrases.
//!
//! Two on-disk shapes are accepted. Lines starting with `(` are parsed as
//! constituency trees (root label = sentence label); anything else must be
//! `label<TAB>token token ...`. Fine-grained labels come from a five-point
//! scale for sentences/phrases or a three-point scale for tweets; the
//! binary mapping removes the neutral class and merges strong with normal.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::treebank::{extract_phrases, parse_tree};
use super::{CorpusError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub enum SentLabel {
    StrongNeg,
    Neg,
    Neutral,
    Pos,
    StrongPos,
}

impl SentLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            SentLabel::StrongNeg => "strong-neg",
            SentLabel::Neg => "neg",
            SentLabel::Neutral => "neutral",
            SentLabel::Pos => "pos",
            SentLabel::StrongPos => "strong-pos",
        }
    }
}

impl std::fmt::Display for SentLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Granularity {
    Fine,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Unit {
    Sentence,
    Phrase,
    Tweet,
}

/// The ordered class inventory of a dataset; class indices for the softmax
/// head are positions in this list.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct LabelScheme {
    pub labels: Vec<SentLabel>,
}

impl LabelScheme {
    /// Five-point scale: strong-neg, neg, neutral, pos, strong-pos.
    pub fn fine5() -> Self {
        Self {
            labels: vec![
                SentLabel::StrongNeg,
                SentLabel::Neg,
                SentLabel::Neutral,
                SentLabel::Pos,
                SentLabel::StrongPos,
            ],
        }
    }

    /// Three-point tweet scale: neg, neutral, pos.
    pub fn fine3() -> Self {
        Self {
            labels: vec![SentLabel::Neg, SentLabel::Neutral, SentLabel::Pos],
        }
    }

    /// Binary: neg, pos.
    pub fn binary() -> Self {
        Self {
            labels: vec![SentLabel::Neg, SentLabel::Pos],
        }
    }

    pub fn for_task(granularity: Granularity, unit: Unit) -> Self {
        match (granularity, unit) {
            (Granularity::Binary, _) => Self::binary(),
            (Granularity::Fine, Unit::Tweet) => Self::fine3(),
            (Granularity::Fine, _) => Self::fine5(),
        }
    }

    pub fn num_classes(&self) -> usize {
        self.labels.len()
    }

    pub fn class_index(&self, label: SentLabel) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    pub fn label_names(&self) -> Vec<String> {
        self.labels.iter().map(|l| l.as_str().to_string()).collect()
    }

    fn parse_label(&self, s: &str) -> Option<SentLabel> {
        let t = s.trim();
        // numeric labels index the scheme's scale directly
        if let Ok(n) = t.parse::<usize>() {
            return self.labels.get(n).copied();
        }
        let named = match t.to_ascii_lowercase().as_str() {
            "strong-neg" | "strongneg" | "very negative" | "strong negative" => SentLabel::StrongNeg,
            "neg" | "negative" => SentLabel::Neg,
            "neutral" | "objective" => SentLabel::Neutral,
            "pos" | "positive" => SentLabel::Pos,
            "strong-pos" | "strongpos" | "very positive" | "strong positive" => SentLabel::StrongPos,
            _ => return None,
        };
        if self.labels.contains(&named) {
            Some(named)
        } else {
            None
        }
    }

    /// Map a five-point (or three-point) label onto this scheme for treebank
    /// node labels, which are always on the 0..=4 scale.
    fn from_tree_label(&self, raw: u8) -> Option<SentLabel> {
        let fine5 = LabelScheme::fine5();
        fine5.labels.get(raw as usize).copied()
    }
}

/// One labeled example.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentimentExample {
    pub tokens: Vec<String>,
    pub label: SentLabel,
    pub granularity: Granularity,
    pub unit: Unit,
}

/// Load a sentiment split. `granularity` and `unit` pick the label scheme;
/// treebank input with `unit == Phrase` expands every tree node into an
/// example, otherwise only the root is kept.
pub fn load_sentiment(
    path: impl AsRef<Path>,
    granularity: Granularity,
    unit: Unit,
) -> Result<Vec<SentimentExample>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = BufReader::new(file);
    let scheme = LabelScheme::for_task(granularity, unit);

    let mut examples = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('(') {
            let tree = parse_tree(trimmed, path, line_no)?;
            let raw: Vec<(Vec<String>, u8)> = if unit == Unit::Phrase {
                extract_phrases(&tree)
            } else {
                vec![(
                    tree.leaves().into_iter().map(String::from).collect(),
                    tree.label,
                )]
            };
            for (tokens, raw_label) in raw {
                let fine = scheme.from_tree_label(raw_label).ok_or_else(|| {
                    CorpusError::parse(path, line_no, format!("unknown tree label {raw_label}"))
                })?;
                let example = SentimentExample {
                    tokens,
                    label: fine,
                    granularity: Granularity::Fine,
                    unit,
                };
                match granularity {
                    Granularity::Fine => examples.push(example),
                    // binary treebank data is the fine data with neutral
                    // removed and strong/normal merged
                    Granularity::Binary => {
                        if let Some(mapped) = to_binary(&example)
                            .map_err(|e| CorpusError::Usage(e.to_string()))?
                        {
                            examples.push(mapped);
                        }
                    }
                }
            }
        } else {
            let (label_str, rest) = trimmed.split_once('\t').ok_or_else(|| {
                CorpusError::parse(path, line_no, "expected 'label<TAB>token token ...'")
            })?;
            let label = scheme.parse_label(label_str).ok_or_else(|| {
                CorpusError::parse(path, line_no, format!("unknown label string '{label_str}'"))
            })?;
            let tokens: Vec<String> = rest.split_whitespace().map(String::from).collect();
            if tokens.is_empty() {
                return Err(CorpusError::parse(path, line_no, "example has no tokens"));
            }
            examples.push(SentimentExample {
                tokens,
                label,
                granularity,
                unit,
            });
        }
    }
    Ok(examples)
}

/// Map a fine-grained example to the binary setting: neutral is removed,
/// strong and normal polarities are merged. Already-binary input is a usage
/// error.
pub fn to_binary(example: &SentimentExample) -> Result<Option<SentimentExample>> {
    if example.granularity == Granularity::Binary {
        return Err(CorpusError::Usage(
            "to_binary applied to an example that is already binary".to_string(),
        ));
    }
    let label = match example.label {
        SentLabel::Neutral => return Ok(None),
        SentLabel::StrongNeg | SentLabel::Neg => SentLabel::Neg,
        SentLabel::StrongPos | SentLabel::Pos => SentLabel::Pos,
    };
    Ok(Some(SentimentExample {
        tokens: example.tokens.clone(),
        label,
        granularity: Granularity::Binary,
        unit: example.unit,
    }))
}
