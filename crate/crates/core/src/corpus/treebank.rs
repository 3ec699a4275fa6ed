//! Parenthesized constituency trees with an integer sentiment label at
//! every node, e.g. `(3 (2 An) (4 (2 odd) (3 gem)))`.

use std::path::Path;

use super::{CorpusError, Result};

/// One tree node: a label, the covered token span, and child nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhraseTree {
    pub label: u8,
    /// Leaf token for terminal nodes.
    pub token: Option<String>,
    pub children: Vec<PhraseTree>,
    /// Half-open token span [start, end) covered by this node.
    pub span: (usize, usize),
}

impl PhraseTree {
    /// Tokens covered by this node, left to right.
    pub fn leaves(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a str>) {
        if let Some(tok) = &self.token {
            out.push(tok.as_str());
        }
        for child in &self.children {
            child.collect_leaves(out);
        }
    }

    /// All nodes in pre-order (root first).
    pub fn nodes(&self) -> Vec<&PhraseTree> {
        let mut out = Vec::new();
        self.collect_nodes(&mut out);
        out
    }

    fn collect_nodes<'a>(&'a self, out: &mut Vec<&'a PhraseTree>) {
        out.push(self);
        for child in &self.children {
            child.collect_nodes(out);
        }
    }
}

/// Parse one tree from its textual form.
pub fn parse_tree(text: &str, path: &Path, line: usize) -> Result<PhraseTree> {
    let chars: Vec<char> = text.chars().collect();
    let mut pos = 0usize;
    let mut next_token = 0usize;
    let tree = parse_node(&chars, &mut pos, &mut next_token, path, line)?;
    skip_ws(&chars, &mut pos);
    if pos != chars.len() {
        return Err(CorpusError::parse(
            path,
            line,
            format!("trailing content after tree at offset {pos}"),
        ));
    }
    Ok(tree)
}

fn skip_ws(chars: &[char], pos: &mut usize) {
    while *pos < chars.len() && chars[*pos].is_whitespace() {
        *pos += 1;
    }
}

fn parse_node(
    chars: &[char],
    pos: &mut usize,
    next_token: &mut usize,
    path: &Path,
    line: usize,
) -> Result<PhraseTree> {
    skip_ws(chars, pos);
    if *pos >= chars.len() || chars[*pos] != '(' {
        return Err(CorpusError::parse(
            path,
            line,
            format!("expected '(' at offset {pos}"),
        ));
    }
    *pos += 1;
    skip_ws(chars, pos);

    let label_start = *pos;
    while *pos < chars.len() && !chars[*pos].is_whitespace() && chars[*pos] != '(' && chars[*pos] != ')' {
        *pos += 1;
    }
    let label_str: String = chars[label_start..*pos].iter().collect();
    let label: u8 = label_str.parse().map_err(|_| {
        CorpusError::parse(
            path,
            line,
            if label_str.is_empty() {
                "unlabeled node".to_string()
            } else {
                format!("node label '{label_str}' is not an integer")
            },
        )
    })?;
    skip_ws(chars, pos);

    let span_start = *next_token;
    let mut children = Vec::new();
    let mut token = None;
    if *pos < chars.len() && chars[*pos] == '(' {
        while *pos < chars.len() && chars[*pos] == '(' {
            children.push(parse_node(chars, pos, next_token, path, line)?);
            skip_ws(chars, pos);
        }
    } else {
        let tok_start = *pos;
        while *pos < chars.len() && chars[*pos] != ')' {
            *pos += 1;
        }
        let tok: String = chars[tok_start..*pos].iter().collect();
        let tok = tok.trim().to_string();
        if tok.is_empty() {
            return Err(CorpusError::parse(
                path,
                line,
                "node has neither children nor a token".to_string(),
            ));
        }
        token = Some(tok);
        *next_token += 1;
    }
    if *pos >= chars.len() || chars[*pos] != ')' {
        return Err(CorpusError::parse(
            path,
            line,
            format!("expected ')' at offset {pos}"),
        ));
    }
    *pos += 1;
    Ok(PhraseTree {
        label,
        token,
        children,
        span: (span_start, *next_token),
    })
}

/// One sentiment example per tree node: the node's token span labeled with
/// the node's sentiment. The root node is the sentence-level example.
pub fn extract_phrases(tree: &PhraseTree) -> Vec<(Vec<String>, u8)> {
    tree.nodes()
        .into_iter()
        .map(|node| {
            (
                node.leaves().into_iter().map(String::from).collect(),
                node.label,
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn p() -> PathBuf {
        PathBuf::from("test.trees")
    }

    #[test]
    fn parses_nested_tree_with_spans() {
        let t = parse_tree("(3 (2 An) (4 (2 odd) (3 gem)))", &p(), 1).unwrap();
        assert_eq!(t.label, 3);
        assert_eq!(t.leaves(), vec!["An", "odd", "gem"]);
        assert_eq!(t.span, (0, 3));
        assert_eq!(t.children[1].span, (1, 3));
    }

    #[test]
    fn single_token_tree_yields_exactly_one_phrase() {
        let t = parse_tree("(2 Wow)", &p(), 1).unwrap();
        let phrases = extract_phrases(&t);
        assert_eq!(phrases, vec![(vec!["Wow".to_string()], 2)]);
    }

    #[test]
    fn phrase_count_equals_node_count() {
        let t = parse_tree("(3 (2 An) (4 (2 odd) (3 gem)))", &p(), 1).unwrap();
        let phrases = extract_phrases(&t);
        assert_eq!(phrases.len(), 5);
        assert_eq!(phrases[0].0, vec!["An", "odd", "gem"]);
        assert_eq!(phrases[0].1, 3);
        assert_eq!(phrases[4], (vec!["gem".to_string()], 3));
    }

    #[test]
    fn unlabeled_node_is_a_parse_error() {
        assert!(parse_tree("(3 (2 An) ( (2 odd)))", &p(), 1).is_err());
        assert!(parse_tree("(NP (2 An))", &p(), 1).is_err());
    }
}
