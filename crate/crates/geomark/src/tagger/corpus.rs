//! Labeled corpus file format: one record per line — page id, tab,
//! space-joined tokens, tab, space-joined tags.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::tagger::scheme::{decode_bieso, LocationEntity, SchemeError, Tag};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot access corpus {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: expected 3 tab-separated fields")]
    FieldCount { line: usize },
    #[error("line {line}: {source}")]
    BadTag { line: usize, source: SchemeError },
    #[error("line {line}: {tokens} tokens but {tags} tags")]
    LengthMismatch {
        line: usize,
        tokens: usize,
        tags: usize,
    },
    #[error("line {line}: empty page")]
    EmptyPage { line: usize },
}

/// One labeled page: tokens plus one gold tag per token.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPage {
    pub id: String,
    pub tokens: Vec<String>,
    pub tags: Vec<Tag>,
}

impl LabeledPage {
    pub fn new(id: impl Into<String>, tokens: Vec<String>, tags: Vec<Tag>) -> Self {
        debug_assert_eq!(tokens.len(), tags.len());
        Self {
            id: id.into(),
            tokens,
            tags,
        }
    }

    /// Gold entities decoded from the gold tags.
    pub fn entities(&self) -> Vec<LocationEntity> {
        decode_bieso(&self.tokens, &self.tags).expect("lengths match by construction")
    }
}

pub fn parse_corpus(text: &str) -> Result<Vec<LabeledPage>, CorpusError> {
    let mut pages = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let mut fields = raw.split('\t');
        let (id, tokens, tags) = match (fields.next(), fields.next(), fields.next(), fields.next())
        {
            (Some(id), Some(tokens), Some(tags), None) => (id, tokens, tags),
            _ => return Err(CorpusError::FieldCount { line }),
        };
        let tokens: Vec<String> = tokens.split(' ').filter(|t| !t.is_empty()).map(Into::into).collect();
        let tags: Vec<Tag> = tags
            .split(' ')
            .filter(|t| !t.is_empty())
            .map(Tag::parse)
            .collect::<Result<_, _>>()
            .map_err(|source| CorpusError::BadTag { line, source })?;
        if tokens.is_empty() {
            return Err(CorpusError::EmptyPage { line });
        }
        if tokens.len() != tags.len() {
            return Err(CorpusError::LengthMismatch {
                line,
                tokens: tokens.len(),
                tags: tags.len(),
            });
        }
        pages.push(LabeledPage::new(id, tokens, tags));
    }
    Ok(pages)
}

pub fn read_corpus(path: &Path) -> Result<Vec<LabeledPage>, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_corpus(&text)
}

pub fn corpus_to_text(pages: &[LabeledPage]) -> String {
    let mut out = String::new();
    for page in pages {
        let tags: Vec<String> = page.tags.iter().map(|t| t.to_string()).collect();
        out.push_str(&format!(
            "{}\t{}\t{}\n",
            page.id,
            page.tokens.join(" "),
            tags.join(" ")
        ));
    }
    out
}

pub fn write_corpus(pages: &[LabeledPage], path: &Path) -> Result<(), CorpusError> {
    std::fs::write(path, corpus_to_text(pages)).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_roundtrip() {
        let text = "p1\t800 Avenue O , Ely\tB-det I-det E-det O S-city\np2\thello world\tO O\n";
        let pages = parse_corpus(text).unwrap();
        assert_eq!(pages.len(), 2);
        assert_eq!(pages[0].tokens.len(), 5);
        assert_eq!(corpus_to_text(&pages), text);
    }

    #[test]
    fn length_mismatch_reported_with_line() {
        let err = parse_corpus("p1\ta b\tO\n").unwrap_err();
        assert!(matches!(err, CorpusError::LengthMismatch { line: 1, .. }));
    }

    #[test]
    fn bad_tag_reported() {
        let err = parse_corpus("p1\ta\tQ-det\n").unwrap_err();
        assert!(matches!(err, CorpusError::BadTag { .. }));
    }
}
