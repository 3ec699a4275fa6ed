//! Joint cue/scope BIO encoding.
//!
//! Each token gets one of five labels: O, B-Cue, I-Cue, B-Scope, I-Scope.
//! All negation instances of a sentence are merged by set union before
//! labeling; the links between particular cues and their scopes are
//! deliberately dropped. When a token ends up in both the merged cue set
//! and the merged scope set, cue wins.

use std::collections::BTreeSet;

use super::NegSentence;

/// O is label index 0, which the Viterbi tie-break relies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NegLabel {
    O = 0,
    BCue = 1,
    ICue = 2,
    BScope = 3,
    IScope = 4,
}

impl NegLabel {
    pub const COUNT: usize = 5;

    pub const ALL: [NegLabel; 5] = [
        NegLabel::O,
        NegLabel::BCue,
        NegLabel::ICue,
        NegLabel::BScope,
        NegLabel::IScope,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<NegLabel> {
        NegLabel::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NegLabel::O => "O",
            NegLabel::BCue => "B-Cue",
            NegLabel::ICue => "I-Cue",
            NegLabel::BScope => "B-Scope",
            NegLabel::IScope => "I-Scope",
        }
    }

    pub fn parse(s: &str) -> Option<NegLabel> {
        NegLabel::ALL.iter().copied().find(|l| l.as_str() == s)
    }

    pub fn is_cue(self) -> bool {
        matches!(self, NegLabel::BCue | NegLabel::ICue)
    }

    pub fn is_scope(self) -> bool {
        matches!(self, NegLabel::BScope | NegLabel::IScope)
    }
}

impl std::fmt::Display for NegLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-token labels for one sentence.
pub type TagSequence = Vec<NegLabel>;

/// Encode a sentence's merged cue/scope membership as a BIO tag sequence.
/// B/I is assigned per contiguous run within each category.
pub fn to_bio(sentence: &NegSentence) -> TagSequence {
    let n = sentence.len();
    let mut cue: BTreeSet<usize> = BTreeSet::new();
    let mut scope: BTreeSet<usize> = BTreeSet::new();
    for inst in &sentence.instances {
        cue.extend(inst.cue_tokens.iter().copied());
        scope.extend(inst.scope_tokens.iter().copied());
    }
    let mut tags = vec![NegLabel::O; n];
    for t in 0..n {
        if cue.contains(&t) {
            tags[t] = if t > 0 && cue.contains(&(t - 1)) {
                NegLabel::ICue
            } else {
                NegLabel::BCue
            };
        } else if scope.contains(&t) && !cue.contains(&t) {
            // a preceding token only continues the run if it is scope and
            // not claimed by a cue
            let prev_in_run = t > 0 && scope.contains(&(t - 1)) && !cue.contains(&(t - 1));
            tags[t] = if prev_in_run {
                NegLabel::IScope
            } else {
                NegLabel::BScope
            };
        }
    }
    tags
}

/// Recover the union cue-token and scope-token sets from a tag sequence.
/// This inverts [`to_bio`] at the union level; per-instance links are not
/// recoverable.
pub fn tag_sets(tags: &[NegLabel]) -> (BTreeSet<usize>, BTreeSet<usize>) {
    let mut cue = BTreeSet::new();
    let mut scope = BTreeSet::new();
    for (t, &label) in tags.iter().enumerate() {
        if label.is_cue() {
            cue.insert(t);
        } else if label.is_scope() {
            scope.insert(t);
        }
    }
    (cue, scope)
}

/// BIO well-formedness: I-X may only follow B-X or I-X of the same category.
pub fn is_well_formed(tags: &[NegLabel]) -> bool {
    for t in 0..tags.len() {
        let prev = if t == 0 { NegLabel::O } else { tags[t - 1] };
        match tags[t] {
            NegLabel::ICue if !prev.is_cue() => return false,
            NegLabel::IScope if !prev.is_scope() => return false,
            _ => {}
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CorpusId, NegInstance};

    fn sent(tokens: &str, instances: Vec<NegInstance>) -> NegSentence {
        NegSentence::new(
            tokens.split_whitespace().map(String::from).collect(),
            instances,
            CorpusId::Other("test".into()),
        )
    }

    #[test]
    fn figure_style_two_instance_sentence() {
        let s = sent(
            "There is no flowery dialog , and time is n't wasted .",
            vec![
                NegInstance::new([2], [3, 4]),
                NegInstance::new([8, 9], [10]),
            ],
        );
        let tags: Vec<&str> = to_bio(&s).iter().map(|l| l.as_str()).collect();
        assert_eq!(
            tags,
            vec!["O", "O", "B-Cue", "B-Scope", "I-Scope", "O", "O", "O", "B-Cue", "I-Cue", "B-Scope", "O"]
        );
    }

    #[test]
    fn sentence_without_instances_is_all_o() {
        let s = sent("nothing to see here", vec![]);
        assert!(to_bio(&s).iter().all(|&l| l == NegLabel::O));
    }

    #[test]
    fn overlapping_scopes_union_like_a_single_instance() {
        let two = sent(
            "a b c d e f",
            vec![
                NegInstance::new([1], [2, 3]),
                NegInstance::new([1], [3, 4]),
            ],
        );
        let merged = sent("a b c d e f", vec![NegInstance::new([1], [2, 3, 4])]);
        assert_eq!(to_bio(&two), to_bio(&merged));
    }

    #[test]
    fn cue_interrupting_a_scope_restarts_the_run() {
        let s = sent(
            "a b c d e",
            vec![NegInstance::new([2], [1, 3]), NegInstance::new([2], [4])],
        );
        let tags = to_bio(&s);
        assert_eq!(
            tags,
            vec![
                NegLabel::O,
                NegLabel::BScope,
                NegLabel::BCue,
                NegLabel::BScope,
                NegLabel::IScope
            ]
        );
        assert!(is_well_formed(&tags));
    }

    #[test]
    fn round_trip_recovers_union_sets() {
        let s = sent(
            "w x y z q r",
            vec![NegInstance::new([0, 1], [3, 5]), NegInstance::new([4], [])],
        );
        let tags = to_bio(&s);
        let (cue, scope) = tag_sets(&tags);
        assert_eq!(cue.into_iter().collect::<Vec<_>>(), vec![0, 1, 4]);
        assert_eq!(scope.into_iter().collect::<Vec<_>>(), vec![3, 5]);
    }
}
