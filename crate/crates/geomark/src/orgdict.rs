//! Organization-name dictionary: a first-word index over known names, and
//! longest-match extraction of organization mentions from page text.
//!
//! Lookup is case-insensitive on whole tokens; after a match the scan resumes
//! past the matched span, so emitted spans never overlap.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::tagger::scheme::{EntityType, LocationEntity};
use crate::tagger::tokenize;

pub const ORGDICT_HEADER: &str = "#geomark orgdict v1";

#[derive(Debug, Error)]
pub enum OrgDictError {
    #[error("cannot access dictionary {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("file does not look like a dictionary (missing `{ORGDICT_HEADER}` header)")]
    BadHeader,
}

/// One dictionary entry: the original name plus its case-folded tokens.
#[derive(Debug, Clone)]
struct DictName {
    name: String,
    folded_tokens: Vec<String>,
}

/// First-word index over organization names. Buckets are sorted by
/// descending token length so the first hit is the longest match.
#[derive(Debug, Clone, Default)]
pub struct OrgDictionary {
    index: BTreeMap<String, Vec<DictName>>,
    size: usize,
}

/// An extracted organization mention. Single-token names are flagged
/// low-confidence: they collide with common words too easily.
#[derive(Debug, Clone, PartialEq)]
pub struct OrgMatch {
    pub entity: LocationEntity,
    pub low_confidence: bool,
}

impl OrgDictionary {
    /// Build the index from raw names. Duplicates (case-insensitive, after
    /// tokenization) collapse to the first occurrence; empty names are
    /// skipped. An empty input yields a valid empty dictionary.
    pub fn build<S: AsRef<str>>(names: impl IntoIterator<Item = S>) -> Self {
        let mut index: BTreeMap<String, Vec<DictName>> = BTreeMap::new();
        let mut seen: BTreeMap<Vec<String>, ()> = BTreeMap::new();
        let mut size = 0usize;
        for name in names {
            let name = name.as_ref().trim();
            if name.is_empty() {
                continue;
            }
            let tokens = tokenize(name);
            if tokens.is_empty() {
                continue;
            }
            let folded: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
            if seen.insert(folded.clone(), ()).is_some() {
                continue;
            }
            let key = folded[0].clone();
            index.entry(key).or_default().push(DictName {
                name: tokens.join(" "),
                folded_tokens: folded,
            });
            size += 1;
        }
        for bucket in index.values_mut() {
            bucket.sort_by(|a, b| {
                b.folded_tokens
                    .len()
                    .cmp(&a.folded_tokens.len())
                    .then_with(|| a.folded_tokens.cmp(&b.folded_tokens))
            });
        }
        Self { index, size }
    }

    /// Total distinct names indexed.
    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    /// Names in stable order, for serialization.
    pub fn names(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self
            .index
            .values()
            .flatten()
            .map(|n| n.name.as_str())
            .collect();
        out.sort_unstable();
        out
    }

    /// Scan tokenized page text for dictionary names. At every position the
    /// longest name starting there wins; the scan resumes after the match.
    pub fn match_organizations(&self, tokens: &[String]) -> Vec<OrgMatch> {
        let folded: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
        let mut out = Vec::new();
        let mut pos = 0usize;
        while pos < tokens.len() {
            let mut advance = 1;
            if let Some(bucket) = self.index.get(&folded[pos]) {
                for name in bucket {
                    let k = name.folded_tokens.len();
                    if pos + k <= tokens.len() && folded[pos..pos + k] == name.folded_tokens[..] {
                        out.push(OrgMatch {
                            entity: LocationEntity::new(
                                EntityType::Organization,
                                tokens[pos..pos + k].join(" "),
                                pos..pos + k,
                            ),
                            low_confidence: k == 1,
                        });
                        advance = k;
                        break;
                    }
                }
            }
            pos += advance;
        }
        out
    }

    /// Canonical dictionary file: header plus one name per line, sorted.
    pub fn to_text(&self) -> String {
        let mut out = String::from(ORGDICT_HEADER);
        out.push('\n');
        for name in self.names() {
            out.push_str(name);
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), OrgDictError> {
        std::fs::write(path, self.to_text()).map_err(|source| OrgDictError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Load a dictionary file produced by [`OrgDictionary::write`].
    pub fn read(path: &Path) -> Result<Self, OrgDictError> {
        let text = std::fs::read_to_string(path).map_err(|source| OrgDictError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim_end() == ORGDICT_HEADER => {}
            _ => return Err(OrgDictError::BadHeader),
        }
        Ok(Self::build(lines))
    }

    /// Load raw one-name-per-line source material (no header).
    pub fn read_names(path: &Path) -> Result<Self, OrgDictError> {
        let text = std::fs::read_to_string(path).map_err(|source| OrgDictError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self::build(text.lines()))
    }
}
