//! BIESO tag scheme and entity span encoding/decoding.
//!
//! Tags are either `O` or a (position, entity-type) pair written `B-det`,
//! `S-city`, ... — 5 entity types x 4 positions + O = 21 tags.

use std::fmt;
use std::ops::Range;

use thiserror::Error;

/// Number of distinct tags.
pub const TAG_COUNT: usize = 21;

#[derive(Debug, Error, PartialEq)]
pub enum SchemeError {
    #[error("unknown tag {0:?}")]
    UnknownTag(String),
    #[error("tag/token length mismatch: {tags} tags for {tokens} tokens")]
    LengthMismatch { tags: usize, tokens: usize },
    #[error("entity spans overlap at token {0}")]
    OverlappingSpans(usize),
    #[error("entity span {start}..{end} outside page of {len} tokens")]
    SpanOutOfBounds {
        start: usize,
        end: usize,
        len: usize,
    },
}

/// The five kinds of location-indicating entities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityType {
    Organization,
    Detailed,
    City,
    State,
    Zip,
}

pub const ENTITY_TYPES: [EntityType; 5] = [
    EntityType::Organization,
    EntityType::Detailed,
    EntityType::City,
    EntityType::State,
    EntityType::Zip,
];

impl EntityType {
    pub fn code(&self) -> &'static str {
        match self {
            EntityType::Organization => "org",
            EntityType::Detailed => "det",
            EntityType::City => "city",
            EntityType::State => "state",
            EntityType::Zip => "zip",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        match code {
            "org" => Some(EntityType::Organization),
            "det" => Some(EntityType::Detailed),
            "city" => Some(EntityType::City),
            "state" => Some(EntityType::State),
            "zip" => Some(EntityType::Zip),
            _ => None,
        }
    }

    fn index(&self) -> usize {
        ENTITY_TYPES.iter().position(|t| t == self).unwrap()
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Token position within an entity span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Position {
    Begin,
    Inside,
    End,
    Single,
}

pub const POSITIONS: [Position; 4] = [
    Position::Begin,
    Position::Inside,
    Position::End,
    Position::Single,
];

impl Position {
    pub fn code(&self) -> &'static str {
        match self {
            Position::Begin => "B",
            Position::Inside => "I",
            Position::End => "E",
            Position::Single => "S",
        }
    }

    fn index(&self) -> usize {
        POSITIONS.iter().position(|p| p == self).unwrap()
    }
}

/// One BIESO tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tag {
    Outside,
    Typed(Position, EntityType),
}

impl Tag {
    /// Dense index in `0..TAG_COUNT`; `O` is 0.
    pub fn index(&self) -> usize {
        match self {
            Tag::Outside => 0,
            Tag::Typed(pos, ty) => 1 + ty.index() * POSITIONS.len() + pos.index(),
        }
    }

    pub fn from_index(index: usize) -> Option<Self> {
        match index {
            0 => Some(Tag::Outside),
            i if i < TAG_COUNT => {
                let i = i - 1;
                Some(Tag::Typed(POSITIONS[i % 4], ENTITY_TYPES[i / 4]))
            }
            _ => None,
        }
    }

    pub fn parse(s: &str) -> Result<Self, SchemeError> {
        if s == "O" {
            return Ok(Tag::Outside);
        }
        let (pos, ty) = s
            .split_once('-')
            .ok_or_else(|| SchemeError::UnknownTag(s.to_string()))?;
        let pos = POSITIONS
            .iter()
            .find(|p| p.code() == pos)
            .copied()
            .ok_or_else(|| SchemeError::UnknownTag(s.to_string()))?;
        let ty = EntityType::from_code(ty).ok_or_else(|| SchemeError::UnknownTag(s.to_string()))?;
        Ok(Tag::Typed(pos, ty))
    }

    pub fn entity_type(&self) -> Option<EntityType> {
        match self {
            Tag::Outside => None,
            Tag::Typed(_, ty) => Some(*ty),
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::Outside => f.write_str("O"),
            Tag::Typed(pos, ty) => write!(f, "{}-{}", pos.code(), ty.code()),
        }
    }
}

/// All tags in index order.
pub fn all_tags() -> Vec<Tag> {
    (0..TAG_COUNT).map(|i| Tag::from_index(i).unwrap()).collect()
}

/// A typed token span decoded from a tag sequence. `token_range` is
/// half-open; the span tokens joined with single spaces reproduce `text`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocationEntity {
    pub entity_type: EntityType,
    pub text: String,
    pub token_range: Range<usize>,
}

impl LocationEntity {
    pub fn new(entity_type: EntityType, text: String, token_range: Range<usize>) -> Self {
        Self {
            entity_type,
            text,
            token_range,
        }
    }
}

/// Decode a tag sequence into entities. Lenient: every maximal run of
/// same-type non-O tags becomes one entity, so malformed runs (I without B,
/// B without E) still yield a span.
pub fn decode_bieso(tokens: &[String], tags: &[Tag]) -> Result<Vec<LocationEntity>, SchemeError> {
    if tokens.len() != tags.len() {
        return Err(SchemeError::LengthMismatch {
            tags: tags.len(),
            tokens: tokens.len(),
        });
    }
    let mut entities = Vec::new();
    let mut i = 0usize;
    while i < tags.len() {
        let ty = match tags[i].entity_type() {
            None => {
                i += 1;
                continue;
            }
            Some(ty) => ty,
        };
        let start = i;
        while i < tags.len() && tags[i].entity_type() == Some(ty) {
            i += 1;
        }
        entities.push(LocationEntity::new(
            ty,
            tokens[start..i].join(" "),
            start..i,
        ));
    }
    Ok(entities)
}

/// Encode entity spans over a page of `len` tokens into a tag sequence:
/// single-token spans get `S`, longer spans `B I* E`, everything else `O`.
pub fn encode_bieso(entities: &[LocationEntity], len: usize) -> Result<Vec<Tag>, SchemeError> {
    let mut tags = vec![Tag::Outside; len];
    for e in entities {
        let Range { start, end } = e.token_range;
        if start >= end || end > len {
            return Err(SchemeError::SpanOutOfBounds { start, end, len });
        }
        for (offset, slot) in tags[start..end].iter_mut().enumerate() {
            if *slot != Tag::Outside {
                return Err(SchemeError::OverlappingSpans(start + offset));
            }
            let pos = if end - start == 1 {
                Position::Single
            } else if offset == 0 {
                Position::Begin
            } else if start + offset == end - 1 {
                Position::End
            } else {
                Position::Inside
            };
            *slot = Tag::Typed(pos, e.entity_type);
        }
    }
    Ok(tags)
}
