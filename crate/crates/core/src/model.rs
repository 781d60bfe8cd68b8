//! Organizational and discussion records: groups, members, meeting areas,
//! folio items and comments.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::decision::PollSpec;
use crate::document::DocumentSource;
use crate::error::{Error, Result};
use crate::ids::{AnchorId, AreaId, CommentId, DocumentId, GroupId, ItemId, PollId, UserId};

pub type Timestamp = DateTime<Utc>;

pub const MAX_GROUP_NAME_CHARS: usize = 100;
pub const MAX_TITLE_CHARS: usize = 200;
pub const MAX_BODY_BYTES: usize = 256 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupAccess {
    Open,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JoinPolicy {
    OpenJoin,
    ApprovalRequired,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Member,
    Moderator,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Membership {
    pub user_id: UserId,
    pub role: Role,
    pub joined_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinRequest {
    pub user_id: UserId,
    pub requested_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Group {
    pub id: GroupId,
    pub name: String,
    pub description: String,
    pub access: GroupAccess,
    pub join_policy: JoinPolicy,
    pub created_at: Timestamp,
    pub members: Vec<Membership>,
    #[serde(default)]
    pub pending: Vec<JoinRequest>,
}

impl Group {
    pub fn membership(&self, user: UserId) -> Option<&Membership> {
        self.members.iter().find(|m| m.user_id == user)
    }

    pub fn is_member(&self, user: UserId) -> bool {
        self.membership(user).is_some()
    }

    pub fn is_moderator(&self, user: UserId) -> bool {
        matches!(self.membership(user), Some(m) if m.role == Role::Moderator)
    }

    pub fn is_pending(&self, user: UserId) -> bool {
        self.pending.iter().any(|r| r.user_id == user)
    }
}

/// A registered user.
///
/// Placeholder members stand in for unmapped senders of an imported mail
/// archive; they carry the original address in `imported_address` and never
/// hold an email of their own, so they can neither log in nor receive mail.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Member {
    pub user_id: UserId,
    pub display_name: String,
    pub email: Option<String>,
    #[serde(default)]
    pub email_verified: bool,
    #[serde(default)]
    pub profile: BTreeMap<String, String>,
    #[serde(default = "default_true")]
    pub notifications: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imported_address: Option<String>,
}

fn default_true() -> bool {
    true
}

impl Member {
    pub fn is_placeholder(&self) -> bool {
        self.imported_address.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeetingArea {
    pub id: AreaId,
    pub owner_group: GroupId,
    pub title: String,
    pub description: String,
    pub created_by: UserId,
    pub created_at: Timestamp,
    #[serde(default)]
    pub linked_groups: Vec<GroupId>,
    #[serde(default)]
    pub folio: Vec<ItemId>,
    #[serde(default)]
    pub discussion: Vec<CommentId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ItemKind {
    Document { document_id: DocumentId },
    Link { url: String, caption: String },
    DiscussionItem { prompt: String },
    Poll { poll_id: PollId },
    Decision { poll_id: PollId },
}

impl ItemKind {
    pub fn poll_id(&self) -> Option<PollId> {
        match self {
            ItemKind::Poll { poll_id } | ItemKind::Decision { poll_id } => Some(*poll_id),
            _ => None,
        }
    }

    pub fn document_id(&self) -> Option<DocumentId> {
        match self {
            ItemKind::Document { document_id } => Some(*document_id),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ItemKind::Document { .. } => "document",
            ItemKind::Link { .. } => "link",
            ItemKind::DiscussionItem { .. } => "discussion item",
            ItemKind::Poll { .. } => "poll",
            ItemKind::Decision { .. } => "decision",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Item {
    pub id: ItemId,
    pub area: AreaId,
    /// 1-based position in the folio, assigned once.
    pub ordinal: u32,
    pub author: UserId,
    pub created_at: Timestamp,
    pub title: String,
    pub kind: ItemKind,
    #[serde(default)]
    pub retracted: bool,
}

impl Item {
    /// The stable reference label, e.g. `6. Proposal: Shorter Workshops`.
    pub fn label(&self) -> String {
        format!("{}. {}", self.ordinal, self.title)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CommentTarget {
    Global,
    OnItem { item: ItemId },
    ReplyTo { comment: CommentId },
    InText { anchor: AnchorId },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comment {
    pub id: CommentId,
    pub area: AreaId,
    pub author: UserId,
    pub created_at: Timestamp,
    pub subject: String,
    pub body: String,
    pub target: CommentTarget,
    #[serde(default)]
    pub retracted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_message_id: Option<String>,
}

impl Comment {
    pub fn reply_parent(&self) -> Option<CommentId> {
        match self.target {
            CommentTarget::ReplyTo { comment } => Some(comment),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemReference {
    pub item_id: ItemId,
    pub anchor_id: Option<AnchorId>,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommentHeader {
    pub comment_id: CommentId,
    pub subject: String,
    pub author: UserId,
    pub author_name: String,
    pub created_at: Timestamp,
    pub item_reference: Option<ItemReference>,
    pub reply_to: Option<CommentId>,
    /// Nesting depth in the threaded ordering; always 0 in chronological order.
    pub depth: usize,
    pub retracted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexOrder {
    Chronological,
    Threaded,
}

/// What a new item should be.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ItemSpec {
    Document {
        title: String,
        source: DocumentSource,
    },
    Link {
        title: String,
        url: String,
        #[serde(default)]
        caption: String,
    },
    DiscussionItem {
        title: String,
        prompt: String,
    },
    /// Becomes a nonbinding poll or a binding decision depending on
    /// `spec.binding`. An empty title falls back to the question.
    Poll {
        #[serde(default)]
        title: String,
        spec: PollSpec,
    },
}

/// Where a new comment points. In-text targets name a document position;
/// the anchor is created alongside the comment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TargetSpec {
    Global,
    OnItem {
        item: ItemId,
    },
    ReplyTo {
        comment: CommentId,
    },
    InText {
        document: DocumentId,
        #[serde(default)]
        revision: Option<u32>,
        offset: usize,
    },
}

pub(crate) fn check_title(field: &'static str, title: &str) -> Result<()> {
    if title.trim().is_empty() {
        return Err(Error::InvalidSpec(format!("{field} must not be empty")));
    }
    check_chars(field, title, MAX_TITLE_CHARS)
}

pub(crate) fn check_chars(field: &'static str, text: &str, max: usize) -> Result<()> {
    if text.chars().count() > max {
        return Err(Error::TooLong {
            field,
            max,
            unit: "characters",
        });
    }
    Ok(())
}

pub(crate) fn check_body(field: &'static str, body: &str) -> Result<()> {
    if body.len() > MAX_BODY_BYTES {
        return Err(Error::TooLong {
            field,
            max: MAX_BODY_BYTES,
            unit: "bytes",
        });
    }
    Ok(())
}

/// Lower-cases and validates an address of the `local@domain` shape.
pub fn normalize_email(raw: &str) -> Result<String> {
    let email = raw.trim().to_ascii_lowercase();
    let valid = match email.split_once('@') {
        Some((local, domain)) => {
            !local.is_empty()
                && !domain.is_empty()
                && !domain.contains('@')
                && domain.contains('.')
                && !email.chars().any(|c| c.is_whitespace() || c.is_control())
                && !email.contains(['<', '>', ',', ';', '"'])
        }
        None => false,
    };
    if valid {
        Ok(email)
    } else {
        Err(Error::InvalidEmail(raw.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn item_label_uses_ordinal() {
        let item = Item {
            id: ItemId::new(),
            area: AreaId::new(),
            ordinal: 6,
            author: UserId::new(),
            created_at: Utc::now(),
            title: "Proposal: Shorter Workshops".into(),
            kind: ItemKind::DiscussionItem { prompt: String::new() },
            retracted: false,
        };
        assert_eq!(item.label(), "6. Proposal: Shorter Workshops");
    }

    #[test]
    fn emails_are_normalized() {
        assert_eq!(normalize_email(" Kazmi@Example.ORG ").unwrap(), "kazmi@example.org");
        for bad in ["", "nobody", "a@b", "a b@example.org", "@example.org", "a@@b.c"] {
            assert!(normalize_email(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn target_wire_shape() {
        let t = CommentTarget::OnItem { item: ItemId::new() };
        let v = serde_json::to_value(t).unwrap();
        assert_eq!(v["type"], "on_item");
        let g = serde_json::to_value(CommentTarget::Global).unwrap();
        assert_eq!(g, serde_json::json!({"type": "global"}));
    }
}
