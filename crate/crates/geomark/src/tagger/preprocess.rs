//! Page preprocessing: tokenization, gold-label projection, copyright-window
//! and address-section recognition, and O-run trimming.
//!
//! Pages keep only the regions that can carry clues: a window of
//! [`CONTEXT_WORDS`] tokens around each `©` and around each recognized
//! address section. Entity tokens outside those regions are relabeled `O`.

use thiserror::Error;

use crate::tagger::corpus::LabeledPage;
use crate::tagger::scheme::{encode_bieso, EntityType, LocationEntity};
#[cfg(test)]
use crate::tagger::scheme::Tag;

/// Words of context kept on each side of a recognized section.
pub const CONTEXT_WORDS: usize = 100;
/// Sliding-window width for the address-section cohesiveness score.
pub const COHESION_WINDOW: usize = 12;
/// Distinct address-item types required inside one window.
pub const COHESION_THRESHOLD: usize = 3;
/// Tokens kept when a page has neither a `©` nor an address section.
pub const NO_SECTION_KEEP: usize = 2 * CONTEXT_WORDS + 1;

#[derive(Debug, Error, PartialEq)]
pub enum PreprocessError {
    #[error("page text contains no tokens")]
    EmptyText,
}

/// Known clue strings for a page; the labeling source.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GoldClues {
    pub organization: Option<String>,
    pub detailed: Option<String>,
    pub city: Option<String>,
    pub state: Option<String>,
    pub zip: Option<String>,
}

impl GoldClues {
    fn items(&self) -> Vec<(EntityType, &str)> {
        // Longer clues first so nested occurrences resolve to the long span.
        let mut out = Vec::new();
        if let Some(v) = &self.detailed {
            out.push((EntityType::Detailed, v.as_str()));
        }
        if let Some(v) = &self.organization {
            out.push((EntityType::Organization, v.as_str()));
        }
        if let Some(v) = &self.city {
            out.push((EntityType::City, v.as_str()));
        }
        if let Some(v) = &self.state {
            out.push((EntityType::State, v.as_str()));
        }
        if let Some(v) = &self.zip {
            out.push((EntityType::Zip, v.as_str()));
        }
        out
    }
}

const ISOLATED_PUNCT: &[char] = &[
    ',', '.', ';', ':', '!', '?', '(', ')', '[', ']', '{', '}', '"', '\u{00a9}',
];

/// Whitespace tokenization with punctuation isolated into its own tokens,
/// so ZIP codes and commas align as separate tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut spaced = String::with_capacity(text.len() + 16);
    for ch in text.chars() {
        if ISOLATED_PUNCT.contains(&ch) {
            spaced.push(' ');
            spaced.push(ch);
            spaced.push(' ');
        } else {
            spaced.push(ch);
        }
    }
    spaced.split_whitespace().map(str::to_string).collect()
}

/// All non-overlapping occurrences of `needle` in `haystack`,
/// case-insensitive per token.
fn find_occurrences(haystack: &[String], needle: &[String]) -> Vec<(usize, usize)> {
    if needle.is_empty() || needle.len() > haystack.len() {
        return Vec::new();
    }
    let folded: Vec<String> = haystack.iter().map(|t| t.to_lowercase()).collect();
    let target: Vec<String> = needle.iter().map(|t| t.to_lowercase()).collect();
    let mut out = Vec::new();
    let mut pos = 0;
    while pos + target.len() <= folded.len() {
        if folded[pos..pos + target.len()] == target[..] {
            out.push((pos, pos + target.len()));
            pos += target.len();
        } else {
            pos += 1;
        }
    }
    out
}

fn merge_intervals(mut intervals: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
    intervals.sort_unstable();
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for (s, e) in intervals {
        match merged.last_mut() {
            Some((_, last_end)) if s <= *last_end => *last_end = (*last_end).max(e),
            _ => merged.push((s, e)),
        }
    }
    merged
}

/// Address-section spans: maximal runs of positions covered by a sliding
/// window containing at least [`COHESION_THRESHOLD`] distinct address item
/// types (detailed, city, state, ZIP).
fn address_sections(len: usize, entities: &[LocationEntity]) -> Vec<(usize, usize)> {
    let address_spans: Vec<&LocationEntity> = entities
        .iter()
        .filter(|e| e.entity_type != EntityType::Organization)
        .collect();
    if address_spans.is_empty() || len == 0 {
        return Vec::new();
    }
    let window = COHESION_WINDOW.min(len);
    let mut qualifying = Vec::new();
    for start in 0..=(len - window) {
        let end = start + window;
        let mut kinds = std::collections::BTreeSet::new();
        for e in &address_spans {
            if e.token_range.start < end && e.token_range.end > start {
                kinds.insert(e.entity_type);
            }
        }
        if kinds.len() >= COHESION_THRESHOLD {
            qualifying.push((start, end));
        }
    }
    merge_intervals(qualifying)
}

/// Independent cohesiveness probe, exposed so fixtures can assert which
/// spans the section recognizer fires on.
pub fn is_address_section(len: usize, entities: &[LocationEntity], pos: usize) -> bool {
    address_sections(len, entities)
        .iter()
        .any(|&(s, e)| pos >= s && pos < e)
}

/// Turn raw page text plus known clue strings into a trimmed, labeled page.
///
/// Labels entity occurrences, keeps `©`-windows and address sections (with
/// [`CONTEXT_WORDS`] context), relabels out-of-section entities to `O`, and
/// drops everything else. A page with no sections keeps its first
/// [`NO_SECTION_KEEP`] tokens, all `O`.
pub fn preprocess_page(
    source_id: &str,
    raw_text: &str,
    clues: &GoldClues,
) -> Result<LabeledPage, PreprocessError> {
    let tokens = tokenize(raw_text);
    if tokens.is_empty() {
        return Err(PreprocessError::EmptyText);
    }
    let len = tokens.len();

    // Project clue strings onto token spans; earlier (longer) items win.
    let mut claimed = vec![false; len];
    let mut entities: Vec<LocationEntity> = Vec::new();
    for (ty, clue) in clues.items() {
        let needle = tokenize(clue);
        for (s, e) in find_occurrences(&tokens, &needle) {
            if claimed[s..e].iter().any(|&c| c) {
                continue;
            }
            claimed[s..e].iter_mut().for_each(|c| *c = true);
            entities.push(LocationEntity::new(ty, tokens[s..e].join(" "), s..e));
        }
    }
    entities.sort_by_key(|e| e.token_range.start);

    // Copyright windows: CONTEXT_WORDS on each side of every "©" token.
    let mut kept: Vec<(usize, usize)> = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| t.as_str() == "\u{00a9}")
        .map(|(k, _)| (k.saturating_sub(CONTEXT_WORDS), (k + CONTEXT_WORDS + 1).min(len)))
        .collect();

    // Address sections with context on both sides.
    for (s, e) in address_sections(len, &entities) {
        kept.push((s.saturating_sub(CONTEXT_WORDS), (e + CONTEXT_WORDS).min(len)));
    }

    let kept = if kept.is_empty() {
        vec![(0, len.min(NO_SECTION_KEEP))]
    } else {
        merge_intervals(kept)
    };

    // Entities must sit entirely inside a kept region to survive.
    let surviving: Vec<LocationEntity> = entities
        .into_iter()
        .filter(|e| {
            kept.iter()
                .any(|&(s, end)| e.token_range.start >= s && e.token_range.end <= end)
        })
        .collect();
    let tags = encode_bieso(&surviving, len).expect("projected spans never overlap");

    // Assemble the trimmed page.
    let mut out_tokens = Vec::new();
    let mut out_tags = Vec::new();
    for &(s, e) in &kept {
        out_tokens.extend_from_slice(&tokens[s..e]);
        out_tags.extend_from_slice(&tags[s..e]);
    }
    Ok(LabeledPage::new(source_id, out_tokens, out_tags))
}
