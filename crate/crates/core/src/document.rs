//! Versioned documents and in-text comment anchors.
//!
//! Plain-text documents admit anchors at whitespace positions. Offsets count
//! Unicode scalar values, never bytes. When a document is revised every anchor
//! that is still live is carried to the new revision through the LCS alignment
//! in [`crate::diff`]; an anchor whose whitespace character did not survive is
//! orphaned and stays orphaned.

use std::collections::BTreeMap;
use std::fmt;

use base64::Engine as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::diff::align_chars;
use crate::error::{Error, Result};
use crate::ids::{AnchorId, AreaId, CommentId, DocumentId, ItemId, UserId};
use crate::model::Timestamp;

pub const DEFAULT_UPLOAD_CAP: usize = 10 * 1024 * 1024;

/// How far a remapped anchor may move to find whitespace again.
pub const SNAP_RADIUS: usize = 20;

pub fn is_anchor_whitespace(c: char) -> bool {
    matches!(c, ' ' | '\t' | '\n')
}

#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DocumentSource {
    PlainText {
        text: String,
    },
    Uploaded {
        #[serde(with = "blob")]
        blob: Vec<u8>,
        filename: String,
        media_type: String,
    },
}

impl DocumentSource {
    pub fn plain(text: impl Into<String>) -> Self {
        DocumentSource::PlainText { text: text.into() }
    }

    /// Plain text received as raw bytes.
    pub fn plain_from_bytes(bytes: Vec<u8>) -> Result<Self> {
        String::from_utf8(bytes)
            .map(|text| DocumentSource::PlainText { text })
            .map_err(|_| Error::InvalidEncoding)
    }

    pub fn format(&self) -> DocumentFormat {
        match self {
            DocumentSource::PlainText { .. } => DocumentFormat::PlainText,
            DocumentSource::Uploaded { .. } => DocumentFormat::Uploaded,
        }
    }

    pub fn text(&self) -> Option<&str> {
        match self {
            DocumentSource::PlainText { text } => Some(text),
            DocumentSource::Uploaded { .. } => None,
        }
    }

    pub fn size(&self) -> usize {
        match self {
            DocumentSource::PlainText { text } => text.len(),
            DocumentSource::Uploaded { blob, .. } => blob.len(),
        }
    }

    pub(crate) fn check_size(&self, cap: usize) -> Result<()> {
        let size = self.size();
        if size > cap {
            return Err(Error::OversizeUpload { size, cap });
        }
        Ok(())
    }
}

impl fmt::Debug for DocumentSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DocumentSource::PlainText { text } => f.debug_struct("PlainText").field("text", text).finish(),
            DocumentSource::Uploaded {
                blob,
                filename,
                media_type,
            } => f
                .debug_struct("Uploaded")
                .field("bytes", &blob.len())
                .field("filename", filename)
                .field("media_type", media_type)
                .finish(),
        }
    }
}

mod blob {
    use super::*;

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&base64::engine::general_purpose::STANDARD.encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let text = String::deserialize(d)?;
        base64::engine::general_purpose::STANDARD
            .decode(text)
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocumentFormat {
    PlainText,
    Uploaded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentRevision {
    pub document_id: DocumentId,
    pub revision: u32,
    pub source: DocumentSource,
    pub author: UserId,
    pub created_at: Timestamp,
}

impl DocumentRevision {
    pub fn text(&self) -> Result<&str> {
        self.source.text().ok_or(Error::NotPlainText)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: DocumentId,
    pub item: ItemId,
    pub area: AreaId,
    pub format: DocumentFormat,
    pub revisions: Vec<DocumentRevision>,
    #[serde(default)]
    pub anchors: Vec<AnchorId>,
}

impl Document {
    pub fn latest(&self) -> &DocumentRevision {
        self.revisions.last().expect("documents always have a first revision")
    }

    pub fn revision(&self, number: u32) -> Result<&DocumentRevision> {
        number
            .checked_sub(1)
            .and_then(|i| self.revisions.get(i as usize))
            .ok_or(Error::UnknownRevision(number))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorPosition {
    Live(usize),
    Orphaned,
}

impl AnchorPosition {
    pub fn offset(self) -> Option<usize> {
        match self {
            AnchorPosition::Live(o) => Some(o),
            AnchorPosition::Orphaned => None,
        }
    }
}

impl Serialize for AnchorPosition {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            AnchorPosition::Live(o) => s.serialize_u64(*o as u64),
            AnchorPosition::Orphaned => s.serialize_str("orphaned"),
        }
    }
}

impl<'de> Deserialize<'de> for AnchorPosition {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Offset(usize),
            Tag(String),
        }
        match Raw::deserialize(d)? {
            Raw::Offset(o) => Ok(AnchorPosition::Live(o)),
            Raw::Tag(t) if t == "orphaned" => Ok(AnchorPosition::Orphaned),
            Raw::Tag(t) => Err(serde::de::Error::custom(format!("unexpected anchor position {t:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Anchor {
    pub id: AnchorId,
    pub document_id: DocumentId,
    pub comment_id: CommentId,
    pub created_on_revision: u32,
    pub positions: BTreeMap<u32, AnchorPosition>,
}

impl Anchor {
    pub fn position_at(&self, revision: u32) -> Option<AnchorPosition> {
        self.positions.get(&revision).copied()
    }

    pub fn latest_position(&self) -> Option<AnchorPosition> {
        self.positions.values().next_back().copied()
    }
}

/// Whether `offset` is a legal anchor position in a plain-text revision.
pub fn validate_anchor_offset(revision: &DocumentRevision, offset: usize) -> Result<bool> {
    let text = revision.text()?;
    match text.chars().nth(offset) {
        Some(c) => Ok(is_anchor_whitespace(c)),
        None => Err(Error::OffsetOutOfRange {
            offset,
            len: text.chars().count(),
        }),
    }
}

/// Carries one anchor offset from `old` to `new`.
pub fn remap_anchor(old: &str, new: &str, offset: usize) -> AnchorPosition {
    remap_offsets(old, new, &[offset])[0]
}

/// Carries many offsets through a single alignment of `old` and `new`.
pub fn remap_offsets(old: &str, new: &str, offsets: &[usize]) -> Vec<AnchorPosition> {
    let old: Vec<char> = old.chars().collect();
    let new: Vec<char> = new.chars().collect();
    let map = align_chars(&old, &new);
    offsets
        .iter()
        .map(|&offset| match map.get(offset).copied().flatten() {
            Some(j) if is_anchor_whitespace(new[j]) => AnchorPosition::Live(j),
            // copies preserve the character, so this arm only guards the
            // invariant against a future change of alignment
            Some(j) => snap_to_whitespace(&new, j).map_or(AnchorPosition::Orphaned, AnchorPosition::Live),
            None => AnchorPosition::Orphaned,
        })
        .collect()
}

/// Nearest whitespace within [`SNAP_RADIUS`], preferring the left side.
fn snap_to_whitespace(text: &[char], at: usize) -> Option<usize> {
    (1..=SNAP_RADIUS).find_map(|d| {
        let left = at.checked_sub(d).filter(|&i| is_anchor_whitespace(text[i]));
        let right = Some(at + d).filter(|&i| i < text.len() && is_anchor_whitespace(text[i]));
        left.or(right)
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Segment {
    Text {
        text: String,
    },
    Marker {
        anchor: AnchorId,
        comment: CommentId,
        active: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedDocument {
    pub document_id: DocumentId,
    pub revision: u32,
    pub segments: Vec<Segment>,
    /// Anchors that no longer have a position at this revision; their
    /// comments stay readable and are listed separately by the viewer.
    pub orphaned: Vec<AnchorId>,
}

impl AnnotatedDocument {
    pub fn plain_text(&self) -> String {
        self.segments
            .iter()
            .filter_map(|s| match s {
                Segment::Text { text } => Some(text.as_str()),
                Segment::Marker { .. } => None,
            })
            .collect()
    }
}

/// Interleaves reference markers with the revision text.
///
/// A marker sits immediately before the whitespace character it is anchored
/// on. Markers sharing an offset keep the order of `anchors`.
pub fn render_annotated(
    revision: &DocumentRevision,
    anchors: &[&Anchor],
    active: Option<AnchorId>,
) -> Result<AnnotatedDocument> {
    let text = revision.text()?;
    let mut live = Vec::with_capacity(anchors.len());
    let mut orphaned = Vec::new();
    for anchor in anchors {
        if anchor.document_id != revision.document_id {
            return Err(Error::AnchorRevisionMismatch(revision.revision));
        }
        match anchor.position_at(revision.revision) {
            Some(AnchorPosition::Live(offset)) => live.push((offset, *anchor)),
            Some(AnchorPosition::Orphaned) => orphaned.push(anchor.id),
            None => return Err(Error::AnchorRevisionMismatch(revision.revision)),
        }
    }
    live.sort_by_key(|(offset, _)| *offset);

    let mut segments = Vec::with_capacity(live.len() * 2 + 1);
    let mut chars = text.char_indices().map(|(b, _)| b).chain(std::iter::once(text.len()));
    let mut consumed_chars = 0usize;
    let mut byte_at = |target: usize, from: &mut usize| -> Result<usize> {
        let byte = chars
            .nth(target - *from)
            .ok_or(Error::AnchorRevisionMismatch(revision.revision))?;
        *from = target + 1;
        Ok(byte)
    };
    let mut run_start = 0usize;
    let mut last_offset = None;
    for (offset, anchor) in live {
        if last_offset != Some(offset) {
            let byte = byte_at(offset, &mut consumed_chars)?;
            if byte == text.len() {
                return Err(Error::AnchorRevisionMismatch(revision.revision));
            }
            if byte > run_start {
                segments.push(Segment::Text {
                    text: text[run_start..byte].to_string(),
                });
            }
            run_start = byte;
            last_offset = Some(offset);
        }
        segments.push(Segment::Marker {
            anchor: anchor.id,
            comment: anchor.comment_id,
            active: active == Some(anchor.id),
        });
    }
    if run_start < text.len() {
        segments.push(Segment::Text {
            text: text[run_start..].to_string(),
        });
    }
    Ok(AnnotatedDocument {
        document_id: revision.document_id,
        revision: revision.revision,
        segments,
        orphaned,
    })
}
