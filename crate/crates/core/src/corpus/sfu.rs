//! Converter for the SFU review corpus negation annotation export.
//!
//! The export is XML with `<W>` token elements inside `<SENTENCE>` blocks;
//! `<cue type='negation' ID='n'>` wraps cue tokens and `<xcope ID='m'>`
//! wraps scope tokens, linking back to its cue with `<ref SRC='n'/>`.
//! Speculation cues and their scopes are ignored. The converter produces
//! [`NegSentence`] values that the column-format writer then normalizes, so
//! all downstream code uses a single parser.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use quick_xml::events::Event;
use quick_xml::Reader;

use super::{CorpusError, CorpusId, NegInstance, NegSentence, Result};

#[derive(Debug)]
struct CueSpan {
    id: Option<String>,
    negation: bool,
    tokens: BTreeSet<usize>,
    opened_at: usize,
}

#[derive(Debug)]
struct ScopeSpan {
    refs: Vec<String>,
    tokens: BTreeSet<usize>,
    opened_at: usize,
}

#[derive(Default)]
struct SentenceState {
    tokens: Vec<String>,
    cues: Vec<CueSpan>,
    scopes: Vec<ScopeSpan>,
    open_cues: Vec<usize>,
    open_scopes: Vec<usize>,
    in_word: bool,
}

impl SentenceState {
    fn add_token(&mut self, surface: &str) {
        for piece in surface.split_whitespace() {
            let idx = self.tokens.len();
            self.tokens.push(piece.to_string());
            for &c in &self.open_cues {
                self.cues[c].tokens.insert(idx);
            }
            for &s in &self.open_scopes {
                self.scopes[s].tokens.insert(idx);
            }
        }
    }

    fn finish(self, path: &Path) -> Option<NegSentence> {
        if self.tokens.is_empty() {
            return None;
        }
        let mut scope_for_cue: Vec<BTreeSet<usize>> = self.cues.iter().map(|_| BTreeSet::new()).collect();
        for scope in &self.scopes {
            let mut targets: Vec<usize> = Vec::new();
            for r in &scope.refs {
                if let Some(i) = self
                    .cues
                    .iter()
                    .position(|c| c.negation && c.id.as_deref() == Some(r.as_str()))
                {
                    targets.push(i);
                }
            }
            if targets.is_empty() && scope.refs.is_empty() {
                // unlinked scope: attach to the nearest preceding negation cue
                if let Some(i) = self
                    .cues
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| c.negation && c.opened_at <= scope.opened_at)
                    .map(|(i, _)| i)
                    .last()
                {
                    targets.push(i);
                }
            }
            if targets.is_empty() {
                if self.cues.iter().any(|c| c.negation) {
                    log::warn!(
                        "{}: dropping scope span with unresolvable cue reference",
                        path.display()
                    );
                }
                continue;
            }
            for t in targets {
                scope_for_cue[t].extend(scope.tokens.iter().copied());
            }
        }
        let instances: Vec<NegInstance> = self
            .cues
            .iter()
            .enumerate()
            .filter(|(_, c)| c.negation && !c.tokens.is_empty())
            .map(|(i, c)| NegInstance::new(c.tokens.iter().copied(), scope_for_cue[i].iter().copied()))
            .collect();
        Some(NegSentence::new(self.tokens, instances, CorpusId::Sfu))
    }
}

fn attr(e: &quick_xml::events::BytesStart<'_>, name: &str) -> Option<String> {
    e.attributes().flatten().find_map(|a| {
        if a.key.as_ref().eq_ignore_ascii_case(name.as_bytes()) {
            // ids and type names are plain text; raw bytes suffice
            Some(String::from_utf8_lossy(&a.value).into_owned())
        } else {
            None
        }
    })
}

/// Parse one SFU review file into sentences.
pub fn parse_sfu_file(path: impl AsRef<Path>) -> Result<Vec<NegSentence>> {
    let path = path.as_ref();
    let mut reader = Reader::from_file(path).map_err(|e| CorpusError::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: format!("cannot open XML: {e}"),
    })?;
    reader.config_mut().trim_text(true);

    let mut sentences = Vec::new();
    let mut current: Option<SentenceState> = None;
    let mut buf = Vec::new();
    loop {
        let event = reader.read_event_into(&mut buf).map_err(|e| CorpusError::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: format!("XML error at byte {}: {e}", reader.buffer_position()),
        })?;
        match event {
            Event::Start(e) => {
                let name = e.name();
                let name = name.as_ref();
                if name.eq_ignore_ascii_case(b"SENTENCE") {
                    current = Some(SentenceState::default());
                } else if let Some(state) = current.as_mut() {
                    if name.eq_ignore_ascii_case(b"W") {
                        state.in_word = true;
                    } else if name.eq_ignore_ascii_case(b"cue") {
                        let kind = attr(&e, "type").unwrap_or_default();
                        state.cues.push(CueSpan {
                            id: attr(&e, "ID"),
                            negation: kind.eq_ignore_ascii_case("negation"),
                            tokens: BTreeSet::new(),
                            opened_at: state.tokens.len(),
                        });
                        let idx = state.cues.len() - 1;
                        state.open_cues.push(idx);
                    } else if name.eq_ignore_ascii_case(b"xcope") {
                        state.scopes.push(ScopeSpan {
                            refs: Vec::new(),
                            tokens: BTreeSet::new(),
                            opened_at: state.tokens.len(),
                        });
                        let idx = state.scopes.len() - 1;
                        state.open_scopes.push(idx);
                    }
                }
            }
            Event::Empty(e) => {
                if let Some(state) = current.as_mut() {
                    if e.name().as_ref().eq_ignore_ascii_case(b"ref") {
                        if let (Some(&scope_idx), Some(src)) =
                            (state.open_scopes.last(), attr(&e, "SRC"))
                        {
                            state.scopes[scope_idx].refs.push(src);
                        }
                    }
                }
            }
            Event::Text(t) => {
                if let Some(state) = current.as_mut() {
                    if state.in_word {
                        let text = t.decode().map_err(|e| CorpusError::Parse {
                            path: path.to_path_buf(),
                            line: 0,
                            message: format!("bad text encoding: {e}"),
                        })?;
                        state.add_token(&text);
                    }
                }
            }
            Event::End(e) => {
                let name = e.name();
                let name = name.as_ref();
                if name.eq_ignore_ascii_case(b"SENTENCE") {
                    if let Some(state) = current.take() {
                        if let Some(sentence) = state.finish(path) {
                            sentences.push(sentence);
                        }
                    }
                } else if let Some(state) = current.as_mut() {
                    if name.eq_ignore_ascii_case(b"W") {
                        state.in_word = false;
                    } else if name.eq_ignore_ascii_case(b"cue") {
                        state.open_cues.pop();
                    } else if name.eq_ignore_ascii_case(b"xcope") {
                        state.open_scopes.pop();
                    }
                }
            }
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    Ok(sentences)
}

/// Convert an SFU corpus directory (recursively, `*.xml` files in sorted
/// path order) into sentences. Only sentences are returned; filtering to
/// negated sentences is the caller's choice.
pub fn convert_sfu_dir(dir: impl AsRef<Path>) -> Result<Vec<NegSentence>> {
    let dir = dir.as_ref();
    let mut files: Vec<PathBuf> = Vec::new();
    collect_xml_files(dir, &mut files)?;
    files.sort();
    let mut sentences = Vec::new();
    for file in files {
        sentences.extend(parse_sfu_file(&file)?);
    }
    Ok(sentences)
}

fn collect_xml_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let entries = std::fs::read_dir(dir).map_err(|source| CorpusError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for entry in entries {
        let entry = entry.map_err(|source| CorpusError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let path = entry.path();
        if path.is_dir() {
            collect_xml_files(&path, out)?;
        } else if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("xml")) {
            out.push(path);
        }
    }
    Ok(())
}
